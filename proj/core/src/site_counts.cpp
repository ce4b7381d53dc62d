#include "sigsite/site_counts.hpp"

#include <numeric>
#include <ostream>

#include "sigsite/alphabet.hpp"
#include "sigsite/error.hpp"
#include "text_util.hpp"

namespace sigsite {

namespace {

char to_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

bool is_missing(char c, std::string_view missing_chars) {
  return missing_chars.find(c) != std::string_view::npos;
}

}  // namespace

int SiteCounts::n1() const noexcept { return std::accumulate(x.begin(), x.end(), 0); }
int SiteCounts::n2() const noexcept { return std::accumulate(y.begin(), y.end(), 0); }

std::vector<int> SiteCounts::pooled() const {
  std::vector<int> z(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) z[s] = x[s] + y[s];
  return z;
}

GroupAlignment parse_fasta(std::string_view text, Group group, std::string_view missing_chars) {
  std::string missing;
  for (char c : missing_chars) missing.push_back(to_upper(c));

  GroupAlignment aln;
  aln.group = group;
  for (auto line : detail::split_lines(text)) {
    if (detail::is_blank(line)) continue;
    if (line.front() == '>') {
      auto id = line.substr(1);
      auto ws = id.find_first_of(" \t");
      if (ws != std::string_view::npos) id = id.substr(0, ws);
      aln.ids.emplace_back(id);
      aln.sequences.emplace_back();
      continue;
    }
    if (aln.sequences.empty()) throw FormatError("sequence data before the first '>' header");
    auto& seq = aln.sequences.back();
    for (char raw : line) {
      if (raw == ' ' || raw == '\t' || raw == '\r') continue;
      const char c = to_upper(raw);
      if (!AminoAlphabet::index(c) && !is_missing(c, missing)) {
        throw FormatError("unknown residue '" + std::string(1, raw) + "' in sequence " +
                          aln.ids.back());
      }
      seq.push_back(c);
    }
  }
  if (aln.sequences.empty()) throw FormatError("no sequences");
  const auto len = aln.sequences.front().size();
  for (std::size_t i = 0; i < aln.sequences.size(); ++i) {
    if (aln.sequences[i].size() != len) {
      throw FormatError("sequence " + aln.ids[i] + " has length " +
                        std::to_string(aln.sequences[i].size()) + ", expected " +
                        std::to_string(len));
    }
  }
  if (len == 0) throw FormatError("no sequences");
  return aln;
}

GroupAlignment load_fasta(const std::filesystem::path& path, Group group,
                          std::string_view missing_chars) {
  return parse_fasta(detail::read_file(path), group, missing_chars);
}

SiteCountsResult build_site_counts(const GroupAlignment& t, const GroupAlignment& nt,
                                   std::string_view missing_chars) {
  if (t.size() == 0 || nt.size() == 0) throw FormatError("no sequences");
  if (t.length() != nt.length()) {
    throw FormatError("group alignments differ in length (" + std::to_string(t.length()) +
                      " vs " + std::to_string(nt.length()) + ")");
  }
  std::string missing;
  for (char c : missing_chars) missing.push_back(to_upper(c));

  SiteCountsResult result;
  result.total_sites = t.length();
  for (std::size_t col = 0; col < t.length(); ++col) {
    SiteCounts site;
    site.site_index = col + 1;
    site.x.assign(AminoAlphabet::kSize, 0);
    site.y.assign(AminoAlphabet::kSize, 0);
    bool keep = true;
    auto tally = [&](const GroupAlignment& aln, std::vector<int>& counts) {
      for (const auto& seq : aln.sequences) {
        const char c = seq[col];
        auto idx = AminoAlphabet::index(c);
        if (!idx || is_missing(c, missing)) {
          keep = false;
          return;
        }
        ++counts[*idx];
      }
    };
    tally(t, site.x);
    if (keep) tally(nt, site.y);
    if (keep) {
      result.sites.push_back(std::move(site));
    } else {
      ++result.dropped_sites;
    }
  }
  result.empty_warning = result.sites.empty();
  return result;
}

std::vector<SiteCounts> parse_count_table(std::string_view text) {
  constexpr std::string_view what = "count table";
  std::vector<std::string_view> lines;
  for (auto line : detail::split_lines(text)) {
    if (!detail::is_blank(line) && line.front() != '#') lines.push_back(line);
  }
  if (lines.empty()) throw FormatError("no sequences");

  constexpr std::size_t n = AminoAlphabet::kSize;
  const auto header = detail::split_ws(lines.front());
  if (header.size() != 1 + 2 * n || header[0] != "site") {
    throw FormatError("count table header must be 'site x_A .. x_Y y_A .. y_Y'");
  }
  for (std::size_t s = 0; s < n; ++s) {
    const std::string letter(1, AminoAlphabet::letter(s));
    if (header[1 + s] != "x_" + letter || header[1 + n + s] != "y_" + letter) {
      throw FormatError("count table column " + std::to_string(s + 2) + " must be x_" + letter);
    }
  }
  if (lines.size() == 1) throw FormatError("no sequences");

  std::vector<SiteCounts> sites;
  sites.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = detail::split_ws(lines[r]);
    if (fields.size() != header.size()) {
      throw FormatError("count table row " + std::to_string(r) + " has " +
                        std::to_string(fields.size()) + " fields");
    }
    SiteCounts site;
    const auto idx = detail::parse_int(fields[0], what);
    if (idx < 1) throw FormatError("site index must be positive");
    site.site_index = static_cast<std::size_t>(idx);
    site.x.resize(n);
    site.y.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const auto xv = detail::parse_int(fields[1 + s], what);
      const auto yv = detail::parse_int(fields[1 + n + s], what);
      if (xv < 0 || yv < 0) throw FormatError("negative count in row " + std::to_string(r));
      site.x[s] = static_cast<int>(xv);
      site.y[s] = static_cast<int>(yv);
    }
    if (site.n1() == 0 || site.n2() == 0) {
      throw FormatError("site " + std::to_string(site.site_index) + " has an empty group");
    }
    if (!sites.empty() && (site.n1() != sites.front().n1() || site.n2() != sites.front().n2())) {
      throw FormatError("site " + std::to_string(site.site_index) +
                        " has group sizes inconsistent with the first row");
    }
    sites.push_back(std::move(site));
  }
  return sites;
}

std::vector<SiteCounts> load_count_table(const std::filesystem::path& path) {
  return parse_count_table(detail::read_file(path));
}

void write_count_table(std::ostream& out, const std::vector<SiteCounts>& sites) {
  constexpr std::size_t n = AminoAlphabet::kSize;
  out << "site";
  for (std::size_t s = 0; s < n; ++s) out << "\tx_" << AminoAlphabet::letter(s);
  for (std::size_t s = 0; s < n; ++s) out << "\ty_" << AminoAlphabet::letter(s);
  out << '\n';
  for (const auto& site : sites) {
    out << site.site_index;
    for (int v : site.x) out << '\t' << v;
    for (int v : site.y) out << '\t' << v;
    out << '\n';
  }
}

}  // namespace sigsite
