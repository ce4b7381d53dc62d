#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sigsite {

enum class Group { kTransmitted, kNonTransmitted };

struct GroupAlignment {
  Group group = Group::kTransmitted;
  std::vector<std::string> ids;
  std::vector<std::string> sequences;  // uppercased, equal length

  std::size_t size() const noexcept { return sequences.size(); }
  std::size_t length() const noexcept { return sequences.empty() ? 0 : sequences.front().size(); }
};

// Per-site residue counts for both groups. x and y have one entry per
// alphabet letter (20 for real data; reduced alphabets appear in tests).
struct SiteCounts {
  std::size_t site_index = 0;  // 1-based alignment column
  std::vector<int> x;          // group T
  std::vector<int> y;          // group NT

  int n1() const noexcept;
  int n2() const noexcept;
  std::vector<int> pooled() const;
  std::size_t alphabet_size() const noexcept { return x.size(); }
};

inline constexpr std::string_view kDefaultMissingChars = "-.XBZJ*";

// Parses aligned FASTA text. Residues are uppercased; any character that is
// neither one of the 20 amino acids nor in `missing_chars` is a FormatError,
// as are ragged lengths (reported with the offending sequence id) and input
// without sequences.
GroupAlignment parse_fasta(std::string_view text, Group group,
                           std::string_view missing_chars = kDefaultMissingChars);
GroupAlignment load_fasta(const std::filesystem::path& path, Group group,
                          std::string_view missing_chars = kDefaultMissingChars);

struct SiteCountsResult {
  std::vector<SiteCounts> sites;
  std::size_t total_sites = 0;
  std::size_t dropped_sites = 0;
  bool empty_warning = false;  // no site survived the missing-value filter
};

// Tabulates one SiteCounts per alignment column, dropping every column in
// which any sequence of either group carries a missing symbol.
SiteCountsResult build_site_counts(const GroupAlignment& t, const GroupAlignment& nt,
                                   std::string_view missing_chars = kDefaultMissingChars);

// Count table: header "site x_A ... x_Y y_A ... y_Y", one row per site.
// Every row must have the same group sizes n1 and n2.
std::vector<SiteCounts> parse_count_table(std::string_view text);
std::vector<SiteCounts> load_count_table(const std::filesystem::path& path);
void write_count_table(std::ostream& out, const std::vector<SiteCounts>& sites);

}  // namespace sigsite
