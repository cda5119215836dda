#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

#include "codecause/error.hpp"
#include "codecause/tokenization.hpp"
#include "json.hpp"

namespace codecause::tokenization {
namespace {

enum class CharClass { Space, OtherSpace, Letter, Digit, Punct };

CharClass char_class(unsigned char c) {
  if (c == ' ') return CharClass::Space;
  if (c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return CharClass::OtherSpace;
  if (std::isalpha(c) || c == '_' || c >= 0x80) return CharClass::Letter;
  if (std::isdigit(c)) return CharClass::Digit;
  return CharClass::Punct;
}

bool is_space(CharClass k) { return k == CharClass::Space || k == CharClass::OtherSpace; }

// GPT-2 style printable rendering of bytes, used only for serialization.
const std::vector<std::string>& byte_to_unicode() {
  static const std::vector<std::string> table = [] {
    std::vector<int> cps(256, -1);
    auto keep = [&](int lo, int hi) {
      for (int b = lo; b <= hi; ++b) cps[b] = b;
    };
    keep('!', '~');
    keep(0xA1, 0xAC);
    keep(0xAE, 0xFF);
    int next = 256;
    for (int b = 0; b < 256; ++b) {
      if (cps[b] < 0) cps[b] = next++;
    }
    std::vector<std::string> out(256);
    for (int b = 0; b < 256; ++b) {
      const int cp = cps[b];
      std::string s;
      if (cp < 0x80) {
        s.push_back(static_cast<char>(cp));
      } else {
        s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
      }
      out[b] = s;
    }
    return out;
  }();
  return table;
}

std::string printable(std::string_view bytes) {
  std::string out;
  for (unsigned char c : bytes) out += byte_to_unicode()[c];
  return out;
}

std::string from_printable(std::string_view text) {
  static const std::map<std::string, char, std::less<>> reverse = [] {
    std::map<std::string, char, std::less<>> m;
    for (int b = 0; b < 256; ++b) m.emplace(byte_to_unicode()[b], static_cast<char>(b));
    return m;
  }();
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    const std::size_t len = c < 0x80 ? 1 : 2;
    const auto it = reverse.find(text.substr(i, len));
    if (it == reverse.end()) throw DataError("BPE model contains an unmappable symbol");
    out.push_back(it->second);
    i += len;
  }
  return out;
}

using Pair = std::pair<std::int32_t, std::int32_t>;

}  // namespace

std::vector<std::string_view> pretokenize(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto cls = [&](std::size_t k) { return char_class(static_cast<unsigned char>(text[k])); };
  while (i < n) {
    const std::size_t start = i;
    const CharClass k = cls(i);
    if (k == CharClass::Space && i + 1 < n && !is_space(cls(i + 1))) {
      const CharClass word = cls(i + 1);
      i += 1;
      while (i < n && cls(i) == word) ++i;
    } else if (is_space(k)) {
      std::size_t j = i;
      while (j < n && is_space(cls(j))) ++j;
      // Leave a trailing single space for the following word.
      if (j < n && j - i > 1 && text[j - 1] == ' ') --j;
      i = j;
    } else {
      while (i < n && cls(i) == k) ++i;
    }
    chunks.push_back(text.substr(start, i - start));
  }
  return chunks;
}

BpeModel::BpeModel() {
  for (int b = 0; b < 256; ++b) add_token(std::string(1, static_cast<char>(b)));
}

void BpeModel::add_token(std::string token) {
  if (token_to_id_.count(token)) return;
  token_to_id_.emplace(token, static_cast<std::int32_t>(id_to_token_.size()));
  id_to_token_.push_back(std::move(token));
}

std::int32_t BpeModel::id_of(const std::string& token) const {
  const auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? -1 : it->second;
}

BpeModel BpeModel::train(const std::vector<std::string>& corpus, std::size_t vocab_size,
                         std::vector<std::string> special_tokens) {
  if (corpus.empty()) throw DataError("cannot train BPE on an empty corpus");
  BpeModel model;
  for (auto& s : special_tokens) model.add_token(s);
  model.specials_ = std::move(special_tokens);
  if (vocab_size <= model.vocab_size()) {
    throw DataError("vocab_size " + std::to_string(vocab_size) + " must exceed the base alphabet of " +
                    std::to_string(model.vocab_size()));
  }

  std::map<std::string, std::int64_t> word_freq;
  for (const std::string& doc : corpus) {
    for (std::string_view chunk : pretokenize(doc)) ++word_freq[std::string(chunk)];
  }
  std::vector<std::vector<std::int32_t>> words;
  std::vector<std::int64_t> freqs;
  for (const auto& [w, f] : word_freq) {
    std::vector<std::int32_t> sym;
    for (unsigned char c : w) sym.push_back(c);
    words.push_back(std::move(sym));
    freqs.push_back(f);
  }

  const auto& tokens = model.id_to_token_;
  auto better = [&tokens](const std::tuple<std::int64_t, std::int32_t, std::int32_t>& a,
                          const std::tuple<std::int64_t, std::int32_t, std::int32_t>& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    const auto& al = tokens[std::get<1>(a)];
    const auto& bl = tokens[std::get<1>(b)];
    if (al != bl) return al < bl;
    return tokens[std::get<2>(a)] < tokens[std::get<2>(b)];
  };
  std::set<std::tuple<std::int64_t, std::int32_t, std::int32_t>, decltype(better)> queue(better);
  std::map<Pair, std::int64_t> counts;
  std::map<Pair, std::set<std::size_t>> where;

  auto change = [&](const Pair& p, std::int64_t delta) {
    auto& c = counts[p];
    if (c > 0) queue.erase({c, p.first, p.second});
    c += delta;
    if (c > 0) queue.insert({c, p.first, p.second});
  };
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t i = 0; i + 1 < words[w].size(); ++i) {
      const Pair p{words[w][i], words[w][i + 1]};
      change(p, freqs[w]);
      where[p].insert(w);
    }
  }

  while (model.vocab_size() < vocab_size && !queue.empty()) {
    const auto [count, left, right] = *queue.begin();
    const Pair best{left, right};
    const std::string merged = tokens[left] + tokens[right];
    model.add_token(merged);
    const std::int32_t merged_id = model.token_to_id_.at(merged);
    model.merge_rank_.emplace(std::make_pair(tokens[left], tokens[right]), model.merges_.size());
    model.merges_.emplace_back(tokens[left], tokens[right]);

    const std::set<std::size_t> affected = where[best];
    for (std::size_t w : affected) {
      auto& sym = words[w];
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) change({sym[i], sym[i + 1]}, -freqs[w]);
      std::vector<std::int32_t> next;
      next.reserve(sym.size());
      for (std::size_t i = 0; i < sym.size();) {
        if (i + 1 < sym.size() && sym[i] == left && sym[i + 1] == right) {
          next.push_back(merged_id);
          i += 2;
        } else {
          next.push_back(sym[i]);
          ++i;
        }
      }
      sym = std::move(next);
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        const Pair p{sym[i], sym[i + 1]};
        change(p, freqs[w]);
        where[p].insert(w);
      }
    }
    where.erase(best);
    // The merged pair may survive when a merge reintroduces it; it must not be picked again.
    if (counts[best] > 0) {
      queue.erase({counts[best], left, right});
      counts[best] = 0;
    }
  }
  return model;
}

std::vector<std::string> BpeModel::encode_chunk(std::string_view chunk) const {
  std::vector<std::string> sym;
  sym.reserve(chunk.size());
  for (char c : chunk) sym.emplace_back(1, c);
  for (;;) {
    std::size_t best_rank = merges_.size();
    std::size_t best_at = 0;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      const auto it = merge_rank_.find({sym[i], sym[i + 1]});
      if (it != merge_rank_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_at = i;
      }
    }
    if (best_rank == merges_.size()) break;
    const auto [l, r] = merges_[best_rank];
    std::vector<std::string> next;
    next.reserve(sym.size());
    for (std::size_t i = 0; i < sym.size();) {
      if (i >= best_at && i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
        next.push_back(l + r);
        i += 2;
      } else {
        next.push_back(std::move(sym[i]));
        ++i;
      }
    }
    sym = std::move(next);
  }
  return sym;
}

std::vector<std::string> BpeModel::encode(std::string_view text) const {
  std::vector<std::string> out;
  while (!text.empty()) {
    std::size_t cut = text.size();
    const std::string* special = nullptr;
    for (const std::string& s : specials_) {
      const std::size_t at = s.empty() ? std::string_view::npos : text.find(s);
      if (at < cut || (at == cut && special && s.size() > special->size())) {
        cut = at;
        special = &s;
      }
    }
    for (std::string_view chunk : pretokenize(text.substr(0, cut))) {
      for (std::string& t : encode_chunk(chunk)) out.push_back(std::move(t));
    }
    if (!special) break;
    out.push_back(*special);
    text.remove_prefix(cut + special->size());
  }
  return out;
}

std::vector<std::int32_t> BpeModel::encode_ids(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const std::string& t : encode(text)) ids.push_back(token_to_id_.at(t));
  return ids;
}

std::string BpeModel::decode(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) out += t;
  return out;
}

std::string BpeModel::decode_ids(const std::vector<std::int32_t>& ids) const {
  std::string out;
  for (std::int32_t id : ids) out += token_of(id);
  return out;
}

std::string BpeModel::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json vocab = nlohmann::ordered_json::object();
  for (std::size_t id = 0; id < id_to_token_.size(); ++id) vocab[printable(id_to_token_[id])] = id;
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const auto& [l, r] : merges_) merges.push_back(printable(l) + " " + printable(r));
  nlohmann::ordered_json specials = nlohmann::ordered_json::array();
  for (const auto& s : specials_) specials.push_back(printable(s));
  j["vocab"] = std::move(vocab);
  j["merges"] = std::move(merges);
  j["special_tokens"] = std::move(specials);
  return j.dump() + "\n";
}

BpeModel BpeModel::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed BPE model: ") + e.what());
  }
  if (!j.contains("vocab") || !j.contains("merges")) throw DataError("BPE model needs 'vocab' and 'merges'");
  std::vector<std::pair<std::int64_t, std::string>> by_id;
  for (const auto& [tok, id] : j["vocab"].items()) by_id.emplace_back(id.get<std::int64_t>(), from_printable(tok));
  std::sort(by_id.begin(), by_id.end());
  BpeModel model;
  model.id_to_token_.clear();
  model.token_to_id_.clear();
  for (std::size_t i = 0; i < by_id.size(); ++i) {
    if (by_id[i].first != static_cast<std::int64_t>(i)) throw DataError("BPE vocab ids must be dense from 0");
    model.add_token(by_id[i].second);
  }
  for (int b = 0; b < 256; ++b) {
    if (model.id_of(std::string(1, static_cast<char>(b))) < 0) {
      throw DataError("BPE vocab is missing byte " + std::to_string(b));
    }
  }
  for (const auto& m : j["merges"]) {
    const std::string line = m.get<std::string>();
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError("malformed BPE merge '" + line + "'");
    std::string l = from_printable(line.substr(0, sp));
    std::string r = from_printable(line.substr(sp + 1));
    if (model.id_of(l + r) < 0) throw DataError("BPE merge result missing from vocab");
    model.merge_rank_.emplace(std::make_pair(l, r), model.merges_.size());
    model.merges_.emplace_back(std::move(l), std::move(r));
  }
  if (j.contains("special_tokens")) {
    for (const auto& s : j["special_tokens"]) model.specials_.push_back(from_printable(s.get<std::string>()));
  }
  return model;
}

}  // namespace codecause::tokenization
