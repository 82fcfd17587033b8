#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toktrack/editor.hpp"
#include "toktrack/types.hpp"

namespace toktrack {

class DumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RevisionRecord {
  RevId rev_id = 0;
  UtcSeconds timestamp = 0;
  EditorId editor;
  std::optional<std::string> text;  // absent when the dump suppressed it
  std::string sha1;                 // lowercase hex of text; empty when text is absent
};

struct PageRecord {
  PageId page_id = 0;
  std::string title;
  std::int64_t ns = 0;
  bool redirect_element = false;
  std::vector<RevisionRecord> revisions;  // sorted by (timestamp, rev_id)
};

struct DumpCounters {
  std::uint64_t pages = 0;
  std::uint64_t revisions = 0;
  std::uint64_t suppressed_texts = 0;
  std::uint64_t sha1_mismatches = 0;  // dump digest disagreed with the text
};

// True when the text starts (after whitespace) with a #REDIRECT directive.
bool is_redirect_text(std::string_view text);

enum class PageSkipReason {
  none,
  wrong_namespace,
  no_revisions,
  latest_text_missing,
  redirect,
};

std::string_view page_skip_reason_name(PageSkipReason reason);

// Article filter shared by processing and validation: main namespace, at
// least one revision, latest revision carries text that is not a redirect.
PageSkipReason page_skip_reason(const PageRecord& page);
inline bool keep_page(const PageRecord& page) {
  return page_skip_reason(page) == PageSkipReason::none;
}

// Streaming reader over a wiki history dump in XML export format. Pages are
// yielded one at a time while the (possibly gzip- or bzip2-compressed) input
// is consumed incrementally, so memory use is bounded by the largest page.
class DumpReader {
 public:
  explicit DumpReader(const std::filesystem::path& path);
  explicit DumpReader(std::unique_ptr<std::istream> input);
  ~DumpReader();
  DumpReader(const DumpReader&) = delete;
  DumpReader& operator=(const DumpReader&) = delete;

  // Next <page> in document order, nullopt after the last one. Throws
  // DumpError on malformed XML, bad field content or a truncated stream.
  std::optional<PageRecord> next_page();

  const DumpCounters& counters() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace toktrack
