#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "toktrack/editor.hpp"
#include "toktrack/hash.hpp"
#include "toktrack/time.hpp"
#include "toktrack/types.hpp"

namespace testsupport {

// The four-revision toy article: a stable first paragraph, a second
// paragraph that gets vandalized, repaired and finally trimmed. Exercises
// add, delete, reintroduction and partial reverts in thirteen tokens.
namespace fig1 {

inline constexpr toktrack::PageId kPageId = 7;
inline constexpr toktrack::RevId kRev[4] = {1001, 1002, 1003, 1004};
// 2016-03-01T12:00:00Z, +1 day, +20 s, +1 day
inline constexpr toktrack::UtcSeconds kTime[4] = {1456833600, 1456920000, 1456920020, 1457006420};
inline const char* kText[4] = {
    "the sun is bright\n\nstar\nabove",
    "the sun is bright\n\nclouds gather\nthey were\nhere today",
    "the sun is bright\n\nstar\nhere today\nstorm",
    "they were\nhere today",
};
inline constexpr std::uint64_t kEditor[4] = {101, 102, 103, 104};

struct ExpectedToken {
  toktrack::TokenId token_id;
  const char* str;
  toktrack::RevId origin;
  toktrack::RevId last_rev;
  std::vector<toktrack::RevId> out;
  std::vector<toktrack::RevId> in;
  bool current;
};

inline std::vector<ExpectedToken> expected_tokens() {
  return {
      {1, "the", 1001, 1003, {1004}, {}, false},
      {2, "sun", 1001, 1003, {1004}, {}, false},
      {3, "is", 1001, 1003, {1004}, {}, false},
      {4, "bright", 1001, 1003, {1004}, {}, false},
      {5, "star", 1001, 1003, {1002, 1004}, {1003}, false},
      {6, "above", 1001, 1001, {1002}, {}, false},
      {7, "clouds", 1002, 1002, {1003}, {}, false},
      {8, "gather", 1002, 1002, {1003}, {}, false},
      {9, "they", 1002, 1004, {1003}, {1004}, true},
      {10, "were", 1002, 1004, {1003}, {1004}, true},
      {11, "here", 1002, 1004, {}, {}, true},
      {12, "today", 1002, 1004, {}, {}, true},
      {13, "storm", 1003, 1003, {1004}, {}, false},
  };
}

}  // namespace fig1

// 40-char hex digest to the base36 form dumps carry in <sha1>.
inline std::string hex_to_base36(std::string_view hex) {
  unsigned char bytes[20] = {};
  for (int i = 0; i < 20; ++i) {
    auto nibble = [&](char c) -> unsigned {
      if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
      return static_cast<unsigned>(c - 'a' + 10);
    };
    bytes[i] = static_cast<unsigned char>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  std::string digits;
  bool all_zero = false;
  while (!all_zero) {
    unsigned rem = 0;
    all_zero = true;
    for (int i = 0; i < 20; ++i) {
      unsigned cur = rem * 256u + bytes[i];
      bytes[i] = static_cast<unsigned char>(cur / 36u);
      rem = cur % 36u;
      if (bytes[i]) all_zero = false;
    }
    digits.push_back("0123456789abcdefghijklmnopqrstuvwxyz"[rem]);
  }
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
  return std::string(digits.rbegin(), digits.rend());
}

inline std::string sha1_base36(std::string_view text) {
  return hex_to_base36(toktrack::sha1_hex(text));
}

struct XmlRevision {
  std::uint64_t id = 0;
  std::string timestamp;        // ISO form
  std::string contributor_xml;  // body of <contributor>...</contributor>
  std::optional<std::string> text;
  bool text_deleted = false;
  std::string sha1_base36;  // empty → computed from text
};

struct XmlPage {
  std::uint64_t id = 0;
  std::string title;
  std::int64_t ns = 0;
  bool redirect_element = false;
  std::vector<XmlRevision> revisions;
};

inline std::string xml_escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string registered_contributor(std::uint64_t user_id, std::string_view name) {
  return "<username>" + xml_escape(name) + "</username><id>" + std::to_string(user_id) + "</id>";
}

inline std::string ip_contributor(std::string_view ip) {
  return "<ip>" + xml_escape(ip) + "</ip>";
}

inline std::string build_dump_xml(const std::vector<XmlPage>& pages) {
  std::string out =
      "<mediawiki xmlns=\"http://www.mediawiki.org/xml/export-0.10/\" version=\"0.10\">\n"
      "  <siteinfo><sitename>test</sitename></siteinfo>\n";
  for (const auto& page : pages) {
    out += "  <page>\n";
    out += "    <title>" + xml_escape(page.title) + "</title>\n";
    out += "    <ns>" + std::to_string(page.ns) + "</ns>\n";
    out += "    <id>" + std::to_string(page.id) + "</id>\n";
    if (page.redirect_element) out += "    <redirect title=\"Elsewhere\" />\n";
    for (const auto& rev : page.revisions) {
      out += "    <revision>\n";
      out += "      <id>" + std::to_string(rev.id) + "</id>\n";
      out += "      <timestamp>" + rev.timestamp + "</timestamp>\n";
      out += "      <contributor>" + rev.contributor_xml + "</contributor>\n";
      if (rev.text_deleted) {
        out += "      <text deleted=\"deleted\" />\n";
      } else if (rev.text) {
        std::string sha = rev.sha1_base36.empty() ? sha1_base36(*rev.text) : rev.sha1_base36;
        out += "      <text>" + xml_escape(*rev.text) + "</text>\n";
        out += "      <sha1>" + sha + "</sha1>\n";
      }
      out += "    </revision>\n";
    }
    out += "  </page>\n";
  }
  out += "</mediawiki>\n";
  return out;
}

inline std::vector<XmlPage> fig1_dump_pages() {
  XmlPage page;
  page.id = fig1::kPageId;
  page.title = "Sun";
  for (int i = 0; i < 4; ++i) {
    XmlRevision rev;
    rev.id = fig1::kRev[i];
    rev.timestamp = toktrack::format_timestamp(fig1::kTime[i]);
    rev.contributor_xml = registered_contributor(fig1::kEditor[i], "editor");
    rev.text = fig1::kText[i];
    page.revisions.push_back(std::move(rev));
  }
  return {page};
}

class TempDir {
 public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / ("toktrack-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out.flush()) throw std::runtime_error("cannot write " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

}  // namespace testsupport
