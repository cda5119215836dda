#include <algorithm>
#include <exception>
#include <map>
#include <set>

#include "codecause/error.hpp"
#include "codecause/ingest.hpp"
#include "codecause/process.hpp"

namespace codecause::ingest {
namespace {

constexpr std::string_view kEmptyTree = "4b825dc642cb6eb9a060e54bf8d69288fbee4904";

struct Commit {
  std::string id;
  std::string parent;  // first parent, empty for a root commit
  Timestamp committed_at;
  std::string message;
};

struct FileChange {
  std::string old_path;  // empty when added
  std::string new_path;
};

class GitRepo {
 public:
  explicit GitRepo(std::filesystem::path dir) : dir_(std::move(dir)) {
    const CommandResult r = git({"rev-parse", "--git-dir"});
    if (r.exit_code != 0) throw DataError("cannot read repository '" + dir_.string() + "'");
  }

  std::string name() const {
    const CommandResult r = git({"config", "--get", "remote.origin.url"});
    std::string url(trim(r.out));
    if (r.exit_code == 0 && !url.empty()) {
      if (url.ends_with(".git")) url.resize(url.size() - 4);
      const auto slash = url.find_last_of("/:");
      const auto prev = slash == std::string::npos ? std::string::npos : url.find_last_of("/:", slash - 1);
      return prev == std::string::npos ? url : url.substr(prev + 1);
    }
    return std::filesystem::weakly_canonical(dir_).filename().string();
  }

  std::vector<Commit> commits() const {
    const CommandResult r = git({"log", "--all", "--no-merges", "--reverse", "--date-order",
                                 "--format=%H%x1f%P%x1f%ct%x1f%B%x1e"});
    if (r.exit_code != 0) {
      // An empty repository has no HEAD; treat it as having no history.
      const CommandResult head = git({"rev-parse", "--verify", "HEAD"});
      if (head.exit_code != 0) return {};
      throw DataError("cannot read history of '" + dir_.string() + "'");
    }
    std::vector<Commit> out;
    std::size_t pos = 0;
    while (pos < r.out.size()) {
      const std::size_t rec_end = r.out.find('\x1e', pos);
      if (rec_end == std::string::npos) break;
      std::string_view rec(r.out.data() + pos, rec_end - pos);
      pos = rec_end + 1;
      while (!rec.empty() && (rec.front() == '\n')) rec.remove_prefix(1);
      if (rec.empty()) continue;
      std::vector<std::string_view> fields;
      std::size_t fpos = 0;
      for (int i = 0; i < 3; ++i) {
        const std::size_t sep = rec.find('\x1f', fpos);
        if (sep == std::string_view::npos) throw DataError("unexpected git log output in '" + dir_.string() + "'");
        fields.push_back(rec.substr(fpos, sep - fpos));
        fpos = sep + 1;
      }
      Commit c;
      c.id = std::string(fields[0]);
      const std::string_view parents = fields[1];
      c.parent = std::string(parents.substr(0, parents.find(' ')));
      c.committed_at = Timestamp{std::stoll(std::string(fields[2]))};
      c.message = std::string(trim(rec.substr(fpos)));
      out.push_back(std::move(c));
    }
    return out;
  }

  std::vector<FileChange> changes(const Commit& c) const {
    const std::string base = c.parent.empty() ? std::string(kEmptyTree) : c.parent;
    const CommandResult r = git({"diff-tree", "-r", "-z", "-M", "--name-status", base, c.id});
    if (r.exit_code != 0) throw DataError("cannot diff commit " + c.id + " in '" + dir_.string() + "'");
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos < r.out.size()) {
      const std::size_t z = r.out.find('\0', pos);
      if (z == std::string::npos) break;
      parts.emplace_back(r.out.substr(pos, z - pos));
      pos = z + 1;
    }
    std::vector<FileChange> out;
    for (std::size_t i = 0; i < parts.size();) {
      const std::string& status = parts[i];
      if (status.empty()) {
        ++i;
        continue;
      }
      const char kind = status[0];
      if ((kind == 'R' || kind == 'C') && i + 2 < parts.size()) {
        out.push_back(FileChange{kind == 'R' ? parts[i + 1] : std::string(), parts[i + 2]});
        i += 3;
      } else if (i + 1 < parts.size()) {
        if (kind == 'A') out.push_back(FileChange{"", parts[i + 1]});
        if (kind == 'M' || kind == 'T') out.push_back(FileChange{parts[i + 1], parts[i + 1]});
        i += 2;
      } else {
        break;
      }
    }
    return out;
  }

  std::optional<std::string> blob(const std::string& rev, const std::string& path) const {
    const CommandResult r = git({"show", rev + ":" + path});
    if (r.exit_code != 0) return std::nullopt;
    return r.out;
  }

 private:
  CommandResult git(std::vector<std::string> args) const {
    std::vector<std::string> argv = {"git", "-C", dir_.string(), "-c", "core.quotepath=off"};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_command(argv);
  }

  std::filesystem::path dir_;
};

bool is_python_path(const std::string& path) { return path.ends_with(".py"); }

// Function source with its own name blanked, used to recognise pure renames.
std::string rename_key(const FunctionSource& f) {
  std::string code = f.code;
  const auto def = code.find("def ");
  if (def != std::string::npos) {
    const auto name_at = code.find(f.name, def + 4);
    if (name_at != std::string::npos) code.replace(name_at, f.name.size(), "\x01");
  }
  return code;
}

std::vector<FunctionSource> functions_or_empty(const std::optional<std::string>& source) {
  if (!source || !is_valid_utf8(*source)) return {};
  return extract_functions(*source);
}

}  // namespace

std::vector<RawSample> harvest_methods(const std::filesystem::path& repo, const DateWindow& window) {
  const GitRepo git(repo);
  const std::string repo_name = git.name();
  std::vector<RawSample> out;
  for (const Commit& commit : git.commits()) {
    if (!window.contains(commit.committed_at)) continue;
    for (const FileChange& change : git.changes(commit)) {
      if (!is_python_path(change.new_path)) continue;
      const auto new_fns = functions_or_empty(git.blob(commit.id, change.new_path));
      const auto old_fns = change.old_path.empty() || commit.parent.empty()
                               ? std::vector<FunctionSource>{}
                               : functions_or_empty(git.blob(commit.parent, change.old_path));
      std::map<std::string, const FunctionSource*> old_by_name;
      for (const auto& f : old_fns) old_by_name.emplace(f.qualified_name, &f);
      std::set<std::string> new_names;
      for (const auto& f : new_fns) new_names.insert(f.qualified_name);
      std::multiset<std::string> vanished_keys;
      for (const auto& f : old_fns) {
        if (!new_names.count(f.qualified_name)) vanished_keys.insert(rename_key(f));
      }
      for (const FunctionSource& f : new_fns) {
        const auto old = old_by_name.find(f.qualified_name);
        if (old != old_by_name.end()) {
          if (old->second->code == f.code) continue;
        } else {
          const auto renamed = vanished_keys.find(rename_key(f));
          if (renamed != vanished_keys.end()) {
            vanished_keys.erase(renamed);
            continue;
          }
        }
        RawSample s;
        s.commit_id = commit.id;
        s.repository = repo_name;
        s.path = change.new_path;
        s.file_name = std::filesystem::path(change.new_path).filename().string();
        s.fun_name = f.name;
        s.commit_message = commit.message;
        s.docstring = f.docstring;
        s.code = f.code;
        s.committed_at = commit.committed_at;
        s.extras["line"] = std::to_string(f.line);
        out.push_back(std::move(s));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RawSample& a, const RawSample& b) {
    if (a.committed_at != b.committed_at) return a.committed_at < b.committed_at;
    if (a.path != b.path) return a.path < b.path;
    if (a.fun_name != b.fun_name) return a.fun_name < b.fun_name;
    return std::stoll(a.extras.at("line")) < std::stoll(b.extras.at("line"));
  });
  return out;
}

std::vector<RawSample> harvest_all(const std::vector<std::filesystem::path>& repos,
                                   const DateWindow& window, int jobs) {
  const auto n = static_cast<std::ptrdiff_t>(repos.size());
  std::vector<std::vector<RawSample>> per_repo(repos.size());
  std::vector<std::exception_ptr> errors(repos.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      per_repo[i] = harvest_methods(repos[i], window);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<RawSample> out;
  for (auto& v : per_repo) {
    for (auto& s : v) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace codecause::ingest
