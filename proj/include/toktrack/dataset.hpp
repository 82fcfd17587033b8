#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toktrack/editor.hpp"
#include "toktrack/types.hpp"

namespace toktrack {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputType {
  current_content,
  deleted_content,
  revisions,
  revision_hashes,  // auxiliary: per-revision content digests for revert analysis
};

std::string_view output_type_name(OutputType type);

// Row of a current_content or deleted_content file. For current rows
// |out| == |in| and last_rev_id is the article's final revision; for deleted
// rows |out| == |in| + 1 and last_rev_id is the revision right before the
// final removal.
struct ContentRow {
  PageId page_id = 0;
  RevId last_rev_id = 0;
  TokenId token_id = 0;
  std::string str;
  RevId origin_rev_id = 0;
  std::vector<RevId> out;
  std::vector<RevId> in;

  bool operator==(const ContentRow&) const = default;
};

struct RevisionRow {
  PageId page_id = 0;
  RevId rev_id = 0;
  UtcSeconds timestamp = 0;
  EditorId editor;

  bool operator==(const RevisionRow& o) const {
    return page_id == o.page_id && rev_id == o.rev_id && timestamp == o.timestamp &&
           editor == o.editor;
  }
};

struct RevisionHashRow {
  PageId page_id = 0;
  RevId rev_id = 0;
  std::string sha1;  // lowercase hex

  bool operator==(const RevisionHashRow&) const = default;
};

struct BatchDescriptor {
  std::string dump_date;  // "YYYYMMDD"
  OutputType output_type = OutputType::current_content;
  std::uint64_t batch_id = 0;
  PageId first_page_id = 0;
  PageId last_page_id = 0;

  bool operator==(const BatchDescriptor&) const = default;
};

// "<dump_date>-<output_type>-<batch_id>-<first_page_id>-<last_page_id>.csv"
// plus ".gz" when compressed.
std::string batch_file_name(const BatchDescriptor& desc, bool compressed);

// Inverse of batch_file_name. Throws FormatError on anything else.
BatchDescriptor parse_batch_file_name(std::string_view name);

// Batch writers. Rows must be sorted by (page_id, token_id) respectively
// (page_id, rev_id), lie within the descriptor's page range and satisfy the
// out/in size relation for their output type; violations throw
// std::invalid_argument. Files are written to a temp name and renamed into
// place. Returns the final path.
std::filesystem::path write_content_batch(const std::vector<ContentRow>& rows,
                                          const BatchDescriptor& desc,
                                          const std::filesystem::path& dir, bool compress);
std::filesystem::path write_revision_batch(const std::vector<RevisionRow>& rows,
                                           const BatchDescriptor& desc,
                                           const std::filesystem::path& dir, bool compress);
std::filesystem::path write_hash_batch(const std::vector<RevisionHashRow>& rows,
                                       const BatchDescriptor& desc,
                                       const std::filesystem::path& dir, bool compress);

struct ContentBatch {
  BatchDescriptor descriptor;
  std::vector<ContentRow> rows;
};
struct RevisionBatch {
  BatchDescriptor descriptor;
  std::vector<RevisionRow> rows;
};
struct RevisionHashBatch {
  BatchDescriptor descriptor;
  std::vector<RevisionHashRow> rows;
};

// Batch readers: exact inverses of the writers. Malformed content (bad
// header, field counts, numbers, list literals, ordering, size relations)
// throws FormatError naming the file and line.
ContentBatch read_content_batch(const std::filesystem::path& path);
RevisionBatch read_revision_batch(const std::filesystem::path& path);
RevisionHashBatch read_hash_batch(const std::filesystem::path& path);

// Serialization helpers shared with the analysis commands.
std::string format_rev_list(const std::vector<RevId>& revs);          // "[1,2]" / "[]"
std::vector<RevId> parse_rev_list(std::string_view literal);          // throws FormatError
std::string csv_quote(std::string_view field);

}  // namespace toktrack
