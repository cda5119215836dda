#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "codecause/csv.hpp"
#include "codecause/error.hpp"
#include "codecause/report.hpp"
#include "codecause/util.hpp"

namespace codecause::report {

using tokenization::TokenClass;

std::vector<TaxonomyCount> taxonomy_counts(const GroupTexts& groups, const tokenization::BpeModel& model,
                                           const tokenization::TaxonomyTable& table) {
  std::vector<TaxonomyCount> out;
  for (const auto& [group, texts] : groups) {
    tokenization::ClassHistogram total;
    for (const std::string& t : texts) {
      for (const auto& [cls, n] : tokenization::classify_tokens(model.encode(t), table)) total[cls] += n;
    }
    for (TokenClass c : tokenization::all_token_classes()) {
      const auto it = total.find(c);
      out.push_back({group, c, it == total.end() ? 0 : it->second});
    }
  }
  return out;
}

std::string taxonomy_counts_csv(const std::vector<TaxonomyCount>& counts) {
  std::string out = csv_line({"group", "class", "count"});
  for (const auto& c : counts) {
    out += csv_line({c.group, std::string(tokenization::class_name(c.token_class)), std::to_string(c.count)});
  }
  return out;
}

TokenHistogram token_histogram(const GroupTexts& groups, const tokenization::BpeModel& model, std::size_t bins) {
  if (bins == 0) throw UsageError("histogram needs at least one bin");
  std::vector<std::vector<std::int64_t>> lengths;
  std::int64_t max_len = 0;
  for (const auto& [group, texts] : groups) {
    auto& ls = lengths.emplace_back();
    for (const std::string& t : texts) {
      ls.push_back(static_cast<std::int64_t>(model.encode(t).size()));
      max_len = std::max(max_len, ls.back());
    }
  }
  TokenHistogram h;
  const auto nb = static_cast<std::int64_t>(bins);
  h.bin_width = std::max<std::int64_t>(1, (max_len + nb) / nb);  // ceil((max_len + 1) / bins)
  for (std::size_t g = 0; g < groups.size(); ++g) {
    h.groups.push_back(groups[g].first);
    std::vector<std::int64_t> counts(bins, 0);
    for (std::int64_t len : lengths[g]) ++counts[static_cast<std::size_t>(std::min(len / h.bin_width, nb - 1))];
    h.counts.push_back(std::move(counts));
  }
  return h;
}

std::vector<double> normalize(const std::vector<std::int64_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0.0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

double js_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw UsageError("JS distance over distributions of different support");
  double div = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) div += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) div += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::sqrt(std::max(0.0, div));
}

namespace {

std::size_t group_index(const TokenHistogram& h, const std::string& group) {
  const auto it = std::find(h.groups.begin(), h.groups.end(), group);
  if (it == h.groups.end()) throw DataError("histogram has no group " + group);
  return static_cast<std::size_t>(it - h.groups.begin());
}

}  // namespace

std::string token_dist_csv(const TokenHistogram& h, const std::string& reference_group) {
  const auto ref = normalize(h.counts[group_index(h, reference_group)]);
  std::string out = csv_line({"group", "bin_lo", "bin_hi", "count", "frequency", "js_to_reference"});
  for (std::size_t g = 0; g < h.groups.size(); ++g) {
    const auto freq = normalize(h.counts[g]);
    const std::string js = format_double(js_distance(freq, ref));
    for (std::size_t b = 0; b < freq.size(); ++b) {
      const auto lo = static_cast<std::int64_t>(b) * h.bin_width;
      out += csv_line({h.groups[g], std::to_string(lo), std::to_string(lo + h.bin_width - 1),
                       std::to_string(h.counts[g][b]), format_double(freq[b]), js});
    }
  }
  return out;
}

std::string token_dist_metadata(const TokenHistogram& h, const std::string& reference_group) {
  const auto ref = normalize(h.counts[group_index(h, reference_group)]);
  nlohmann::json distances = nlohmann::json::object();
  for (std::size_t g = 0; g < h.groups.size(); ++g) distances[h.groups[g]] = js_distance(normalize(h.counts[g]), ref);
  nlohmann::json j = {{"reference", reference_group},
                      {"log_base", "e"},
                      {"measure", "sqrt of Jensen-Shannon divergence"},
                      {"bin_width", h.bin_width},
                      {"bins", h.counts.empty() ? 0 : h.counts.front().size()},
                      {"js_distance", distances}};
  return j.dump(2) + "\n";
}

std::vector<double> proportion_curve(const std::vector<double>& similarities, std::size_t steps) {
  if (steps == 0) throw UsageError("proportion curve needs at least one step");
  std::vector<double> out(steps + 1, 0.0);
  if (similarities.empty()) return out;
  for (std::size_t k = 0; k <= steps; ++k) {
    // Thresholds are k/steps; the slack keeps values like 0.29 from missing 29/100.
    const double t = static_cast<double>(k) / static_cast<double>(steps) - 1e-12;
    const auto n = std::count_if(similarities.begin(), similarities.end(), [&](double v) { return v >= t; });
    out[k] = static_cast<double>(n) / static_cast<double>(similarities.size());
  }
  return out;
}

std::string similarity_proportion_csv(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                                      std::size_t steps) {
  CsvRow header = {"threshold"};
  std::vector<std::vector<double>> curves;
  for (const auto& [g, sims] : groups) {
    header.push_back(g);
    curves.push_back(proportion_curve(sims, steps));
  }
  std::string out = csv_line(header);
  for (std::size_t k = 0; k <= steps; ++k) {
    CsvRow row = {format_fixed(static_cast<double>(k) / static_cast<double>(steps), 2)};
    for (const auto& c : curves) row.push_back(format_double(c[k]));
    out += csv_line(row);
  }
  return out;
}

// ---- SVG -------------------------------------------------------------------

namespace {

const char* const kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Canvas {
  double width = 720, height = 360, left = 60, right = 140, top = 20, bottom = 60;
  std::ostringstream body;

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }

  void text(double x, double y, std::string_view s, std::string_view anchor = "middle", int size = 11) {
    body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" text-anchor=\"" << anchor
         << "\">" << xml_escape(s) << "</text>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\"" << fill
         << "\"/>\n";
  }
  void axes(double y_max, std::string_view y_label) {
    body << "<line x1=\"" << left << "\" y1=\"" << top + plot_h() << "\" x2=\"" << left + plot_w() << "\" y2=\""
         << top + plot_h() << "\" stroke=\"black\"/>\n";
    body << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h()
         << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = y_max * k / 4.0;
      const double y = top + plot_h() * (1.0 - k / 4.0);
      text(left - 6, y + 4, format_fixed(v, y_max >= 10 ? 0 : 2), "end", 10);
    }
    body << "<text x=\"14\" y=\"" << top + plot_h() / 2 << "\" font-size=\"11\" text-anchor=\"middle\" "
         << "transform=\"rotate(-90 14 " << top + plot_h() / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
  }
  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double y = top + 10 + 18.0 * static_cast<double>(i);
      rect(width - right + 12, y - 9, 10, 10, color(i));
      text(width - right + 28, y, names[i], "start");
    }
  }
  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body.str() << "</svg>\n";
    return out.str();
  }
};

}  // namespace

std::string taxonomy_svg(const std::vector<TaxonomyCount>& counts) {
  std::vector<std::string> groups;
  std::int64_t max_count = 1;
  for (const auto& c : counts) {
    if (std::find(groups.begin(), groups.end(), c.group) == groups.end()) groups.push_back(c.group);
    max_count = std::max(max_count, c.count);
  }
  const auto& classes = tokenization::all_token_classes();
  Canvas cv;
  cv.axes(static_cast<double>(max_count), "tokens");
  const double slot = cv.plot_w() / static_cast<double>(classes.size());
  const double bar = slot * 0.8 / static_cast<double>(std::max<std::size_t>(1, groups.size()));
  for (std::size_t k = 0; k < classes.size(); ++k) {
    for (const auto& c : counts) {
      if (c.token_class != classes[k]) continue;
      const auto g = static_cast<std::size_t>(std::find(groups.begin(), groups.end(), c.group) - groups.begin());
      const double h = cv.plot_h() * static_cast<double>(c.count) / static_cast<double>(max_count);
      cv.rect(cv.left + slot * k + slot * 0.1 + bar * g, cv.top + cv.plot_h() - h, bar, h, color(g));
    }
    cv.text(cv.left + slot * (k + 0.5), cv.top + cv.plot_h() + 14, tokenization::class_name(classes[k]), "middle", 9);
  }
  cv.legend(groups);
  return cv.str();
}

std::string token_dist_svg(const TokenHistogram& h) {
  Canvas cv;
  double max_freq = 0.0;
  std::vector<std::vector<double>> freqs;
  for (const auto& c : h.counts) {
    freqs.push_back(normalize(c));
    for (double f : freqs.back()) max_freq = std::max(max_freq, f);
  }
  if (max_freq == 0.0) max_freq = 1.0;
  cv.axes(max_freq, "share of methods");
  const std::size_t bins = h.counts.empty() ? 0 : h.counts.front().size();
  for (std::size_t g = 0; g < freqs.size(); ++g) {
    cv.body << "<polyline fill=\"none\" stroke=\"" << color(g) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t b = 0; b < bins; ++b) {
      const double x = cv.left + cv.plot_w() * (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
      const double y = cv.top + cv.plot_h() * (1.0 - freqs[g][b] / max_freq);
      cv.body << x << "," << y << " ";
    }
    cv.body << "\"/>\n";
  }
  for (std::size_t b = 0; b < bins; b += std::max<std::size_t>(1, bins / 5)) {
    const double x = cv.left + cv.plot_w() * static_cast<double>(b) / static_cast<double>(bins);
    cv.text(x, cv.top + cv.plot_h() + 14, std::to_string(static_cast<std::int64_t>(b) * h.bin_width), "middle", 10);
  }
  cv.text(cv.left + cv.plot_w() / 2, cv.height - 16, "BPE tokens per method");
  cv.legend(h.groups);
  return cv.str();
}

std::string proportion_svg(const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                           std::size_t steps) {
  Canvas cv;
  cv.axes(1.0, "proportion of samples");
  std::vector<std::string> names;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    names.push_back(groups[g].first);
    const auto curve = proportion_curve(groups[g].second, steps);
    cv.body << "<polyline fill=\"none\" stroke=\"" << color(g) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k <= steps; ++k) {
      const double x = cv.left + cv.plot_w() * static_cast<double>(k) / static_cast<double>(steps);
      const double y = cv.top + cv.plot_h() * (1.0 - curve[k]);
      cv.body << x << "," << y << " ";
    }
    cv.body << "\"/>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    cv.text(cv.left + cv.plot_w() * k / 4.0, cv.top + cv.plot_h() + 14, format_fixed(k / 4.0, 2), "middle", 10);
  }
  cv.text(cv.left + cv.plot_w() / 2, cv.height - 16, "Levenshtein similarity threshold");
  cv.legend(names);
  return cv.str();
}

}  // namespace codecause::report
