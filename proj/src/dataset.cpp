#include "toktrack/dataset.hpp"

#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include <charconv>
#include <fstream>

#include "toktrack/time.hpp"

namespace toktrack {

namespace {

constexpr std::string_view kContentHeader = "page_id,last_rev_id,token_id,str,origin_rev_id,out,in";
constexpr std::string_view kRevisionHeader = "page_id,rev_id,timestamp,editor";
constexpr std::string_view kHashHeader = "page_id,rev_id,sha1";

template <typename T>
T parse_number(std::string_view s, const std::string& context) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw FormatError(context + ": bad number '" + std::string(s) + "'");
  }
  return value;
}

std::string row_context(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + " line " + std::to_string(line);
}

// Incremental CSV record reader; handles quoted fields ("" escapes, embedded
// separators) and reports the line a record started on.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, const std::filesystem::path& path)
      : in_(in), path_(path) {}

  bool next(std::vector<std::string>& fields, std::size_t& record_line) {
    fields.clear();
    int c = in_.get();
    while (c == '\r') c = in_.get();
    if (c == std::istream::traits_type::eof()) return false;
    record_line = line_;
    std::string field;
    bool quoted = false;
    auto end_field = [&] {
      fields.push_back(std::move(field));
      field.clear();
      quoted = false;
    };
    while (true) {
      if (c == std::istream::traits_type::eof()) {
        if (quoted) throw FormatError(row_context(path_, record_line) + ": unterminated quote");
        end_field();
        return true;
      }
      char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          int peek = in_.get();
          if (peek == '"') {
            field.push_back('"');
          } else {
            quoted = false;
            c = peek;
            continue;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty()) {
        quoted = true;
      } else if (ch == ',') {
        end_field();
      } else if (ch == '\n') {
        ++line_;
        end_field();
        return true;
      } else if (ch != '\r') {
        field.push_back(ch);
      }
      c = in_.get();
    }
  }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
  std::size_t line_ = 1;
};

bool is_compressed_name(std::string_view name) { return name.ends_with(".gz"); }

void open_input(const std::filesystem::path& path, std::ifstream& raw,
                boost::iostreams::filtering_istream& in) {
  raw.open(path, std::ios::binary);
  if (!raw) throw FormatError("cannot open " + path.string());
  if (is_compressed_name(path.filename().string())) {
    in.push(boost::iostreams::gzip_decompressor());
  }
  in.push(raw);
}

void expect_header(CsvReader& reader, std::string_view expected,
                   const std::filesystem::path& path) {
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next(fields, line)) {
    throw FormatError(path.filename().string() + ": empty file, expected header");
  }
  std::string joined;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) joined.push_back(',');
    joined += fields[i];
  }
  if (joined != expected) {
    throw FormatError(row_context(path, line) + ": bad header '" + joined + "'");
  }
}

class BatchWriter {
 public:
  BatchWriter(const BatchDescriptor& desc, const std::filesystem::path& dir, bool compress)
      : final_path_(dir / batch_file_name(desc, compress)),
        tmp_path_(final_path_.string() + ".tmp") {
    raw_.open(tmp_path_, std::ios::binary | std::ios::trunc);
    if (!raw_) throw std::runtime_error("cannot create " + tmp_path_.string());
    if (compress) {
      out_.push(boost::iostreams::gzip_compressor(
          boost::iostreams::gzip_params(boost::iostreams::gzip::default_compression)));
    }
    out_.push(raw_);
  }

  std::ostream& stream() { return out_; }

  std::filesystem::path commit() {
    out_.reset();
    raw_.close();
    if (!raw_.good()) throw std::runtime_error("write failed for " + tmp_path_.string());
    std::filesystem::rename(tmp_path_, final_path_);
    return final_path_;
  }

 private:
  std::filesystem::path final_path_;
  std::filesystem::path tmp_path_;
  std::ofstream raw_;
  boost::iostreams::filtering_ostream out_;
};

void check_range(PageId page_id, const BatchDescriptor& desc) {
  if (page_id < desc.first_page_id || page_id > desc.last_page_id) {
    throw std::invalid_argument("row page " + std::to_string(page_id) + " outside batch range " +
                                std::to_string(desc.first_page_id) + ".." +
                                std::to_string(desc.last_page_id));
  }
}

}  // namespace

std::string_view output_type_name(OutputType type) {
  switch (type) {
    case OutputType::current_content: return "current_content";
    case OutputType::deleted_content: return "deleted_content";
    case OutputType::revisions: return "revisions";
    case OutputType::revision_hashes: return "revision_hashes";
  }
  throw std::logic_error("bad output type");
}

std::string batch_file_name(const BatchDescriptor& desc, bool compressed) {
  std::string name = desc.dump_date;
  name += '-';
  name += output_type_name(desc.output_type);
  name += '-';
  name += std::to_string(desc.batch_id);
  name += '-';
  name += std::to_string(desc.first_page_id);
  name += '-';
  name += std::to_string(desc.last_page_id);
  name += compressed ? ".csv.gz" : ".csv";
  return name;
}

BatchDescriptor parse_batch_file_name(std::string_view name) {
  std::string_view rest = name;
  if (rest.ends_with(".csv.gz")) {
    rest.remove_suffix(7);
  } else if (rest.ends_with(".csv")) {
    rest.remove_suffix(4);
  } else {
    throw FormatError("bad batch file name: " + std::string(name));
  }
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= rest.size(); ++i) {
    if (i == rest.size() || rest[i] == '-') {
      parts.push_back(rest.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() != 5) throw FormatError("bad batch file name: " + std::string(name));
  BatchDescriptor desc;
  desc.dump_date = std::string(parts[0]);
  if (desc.dump_date.size() != 8 ||
      desc.dump_date.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("bad dump date in batch file name: " + std::string(name));
  }
  bool known = false;
  for (OutputType t : {OutputType::current_content, OutputType::deleted_content,
                       OutputType::revisions, OutputType::revision_hashes}) {
    if (parts[1] == output_type_name(t)) {
      desc.output_type = t;
      known = true;
      break;
    }
  }
  if (!known) throw FormatError("bad output type in batch file name: " + std::string(name));
  const std::string ctx = "batch file name " + std::string(name);
  desc.batch_id = parse_number<std::uint64_t>(parts[2], ctx);
  desc.first_page_id = parse_number<PageId>(parts[3], ctx);
  desc.last_page_id = parse_number<PageId>(parts[4], ctx);
  if (desc.first_page_id > desc.last_page_id) {
    throw FormatError("bad page range in batch file name: " + std::string(name));
  }
  return desc;
}

std::string csv_quote(std::string_view field) {
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_rev_list(const std::vector<RevId>& revs) {
  std::string out = "[";
  for (std::size_t i = 0; i < revs.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(revs[i]);
  }
  out.push_back(']');
  return out;
}

std::vector<RevId> parse_rev_list(std::string_view literal) {
  if (literal.size() < 2 || literal.front() != '[' || literal.back() != ']') {
    throw FormatError("bad revision list '" + std::string(literal) + "'");
  }
  std::string_view body = literal.substr(1, literal.size() - 2);
  std::vector<RevId> revs;
  if (body.empty()) return revs;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      revs.push_back(parse_number<RevId>(body.substr(start, i - start),
                                         "revision list '" + std::string(literal) + "'"));
      start = i + 1;
    }
  }
  return revs;
}

std::filesystem::path write_content_batch(const std::vector<ContentRow>& rows,
                                          const BatchDescriptor& desc,
                                          const std::filesystem::path& dir, bool compress) {
  if (desc.output_type != OutputType::current_content &&
      desc.output_type != OutputType::deleted_content) {
    throw std::invalid_argument("content batch requires a content output type");
  }
  const std::size_t expected_gap = desc.output_type == OutputType::deleted_content ? 1 : 0;
  BatchWriter writer(desc, dir, compress);
  auto& out = writer.stream();
  out << kContentHeader << '\n';
  const ContentRow* prev = nullptr;
  for (const auto& row : rows) {
    check_range(row.page_id, desc);
    if (row.out.size() != row.in.size() + expected_gap) {
      throw std::invalid_argument("token " + std::to_string(row.token_id) + " on page " +
                                  std::to_string(row.page_id) + " violates the out/in relation for " +
                                  std::string(output_type_name(desc.output_type)));
    }
    if (prev && (row.page_id < prev->page_id ||
                 (row.page_id == prev->page_id && row.token_id <= prev->token_id))) {
      throw std::invalid_argument("content rows not sorted by (page_id, token_id)");
    }
    prev = &row;
    out << row.page_id << ',' << row.last_rev_id << ',' << row.token_id << ','
        << csv_quote(row.str) << ',' << row.origin_rev_id << ','
        << csv_quote(format_rev_list(row.out)) << ',' << csv_quote(format_rev_list(row.in))
        << '\n';
  }
  return writer.commit();
}

std::filesystem::path write_revision_batch(const std::vector<RevisionRow>& rows,
                                           const BatchDescriptor& desc,
                                           const std::filesystem::path& dir, bool compress) {
  if (desc.output_type != OutputType::revisions) {
    throw std::invalid_argument("revision batch requires the revisions output type");
  }
  BatchWriter writer(desc, dir, compress);
  auto& out = writer.stream();
  out << kRevisionHeader << '\n';
  const RevisionRow* prev = nullptr;
  for (const auto& row : rows) {
    check_range(row.page_id, desc);
    if (prev && (row.page_id < prev->page_id ||
                 (row.page_id == prev->page_id && row.rev_id <= prev->rev_id))) {
      throw std::invalid_argument("revision rows not sorted by (page_id, rev_id)");
    }
    prev = &row;
    out << row.page_id << ',' << row.rev_id << ',' << format_timestamp(row.timestamp) << ','
        << csv_quote(row.editor.value) << '\n';
  }
  return writer.commit();
}

std::filesystem::path write_hash_batch(const std::vector<RevisionHashRow>& rows,
                                       const BatchDescriptor& desc,
                                       const std::filesystem::path& dir, bool compress) {
  if (desc.output_type != OutputType::revision_hashes) {
    throw std::invalid_argument("hash batch requires the revision_hashes output type");
  }
  BatchWriter writer(desc, dir, compress);
  auto& out = writer.stream();
  out << kHashHeader << '\n';
  const RevisionHashRow* prev = nullptr;
  for (const auto& row : rows) {
    check_range(row.page_id, desc);
    if (prev && (row.page_id < prev->page_id ||
                 (row.page_id == prev->page_id && row.rev_id <= prev->rev_id))) {
      throw std::invalid_argument("hash rows not sorted by (page_id, rev_id)");
    }
    prev = &row;
    out << row.page_id << ',' << row.rev_id << ',' << row.sha1 << '\n';
  }
  return writer.commit();
}

ContentBatch read_content_batch(const std::filesystem::path& path) {
  ContentBatch batch;
  batch.descriptor = parse_batch_file_name(path.filename().string());
  if (batch.descriptor.output_type != OutputType::current_content &&
      batch.descriptor.output_type != OutputType::deleted_content) {
    throw FormatError(path.filename().string() + ": not a content batch");
  }
  const std::size_t expected_gap =
      batch.descriptor.output_type == OutputType::deleted_content ? 1 : 0;
  std::ifstream raw;
  boost::iostreams::filtering_istream in;
  open_input(path, raw, in);
  CsvReader reader(in, path);
  expect_header(reader, kContentHeader, path);
  std::vector<std::string> fields;
  std::size_t line = 0;
  while (reader.next(fields, line)) {
    const std::string ctx = row_context(path, line);
    if (fields.size() != 7) {
      throw FormatError(ctx + ": expected 7 fields, got " + std::to_string(fields.size()));
    }
    ContentRow row;
    row.page_id = parse_number<PageId>(fields[0], ctx);
    row.last_rev_id = parse_number<RevId>(fields[1], ctx);
    row.token_id = parse_number<TokenId>(fields[2], ctx);
    row.str = fields[3];
    row.origin_rev_id = parse_number<RevId>(fields[4], ctx);
    try {
      row.out = parse_rev_list(fields[5]);
      row.in = parse_rev_list(fields[6]);
    } catch (const FormatError& e) {
      throw FormatError(ctx + ": " + e.what());
    }
    if (row.out.size() != row.in.size() + expected_gap) {
      throw FormatError(ctx + ": out/in sizes " + std::to_string(row.out.size()) + "/" +
                        std::to_string(row.in.size()) + " violate the " +
                        std::string(output_type_name(batch.descriptor.output_type)) + " relation");
    }
    if (row.page_id < batch.descriptor.first_page_id ||
        row.page_id > batch.descriptor.last_page_id) {
      throw FormatError(ctx + ": page " + std::to_string(row.page_id) + " outside batch range");
    }
    if (!batch.rows.empty()) {
      const auto& prev = batch.rows.back();
      if (row.page_id < prev.page_id ||
          (row.page_id == prev.page_id && row.token_id <= prev.token_id)) {
        throw FormatError(ctx + ": rows not sorted by (page_id, token_id)");
      }
    }
    batch.rows.push_back(std::move(row));
  }
  return batch;
}

RevisionBatch read_revision_batch(const std::filesystem::path& path) {
  RevisionBatch batch;
  batch.descriptor = parse_batch_file_name(path.filename().string());
  if (batch.descriptor.output_type != OutputType::revisions) {
    throw FormatError(path.filename().string() + ": not a revisions batch");
  }
  std::ifstream raw;
  boost::iostreams::filtering_istream in;
  open_input(path, raw, in);
  CsvReader reader(in, path);
  expect_header(reader, kRevisionHeader, path);
  std::vector<std::string> fields;
  std::size_t line = 0;
  while (reader.next(fields, line)) {
    const std::string ctx = row_context(path, line);
    if (fields.size() != 4) {
      throw FormatError(ctx + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    RevisionRow row;
    row.page_id = parse_number<PageId>(fields[0], ctx);
    row.rev_id = parse_number<RevId>(fields[1], ctx);
    try {
      row.timestamp = parse_timestamp(fields[2]);
      row.editor = EditorId::parse(fields[3]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(ctx + ": " + e.what());
    }
    if (!batch.rows.empty()) {
      const auto& prev = batch.rows.back();
      if (row.page_id < prev.page_id ||
          (row.page_id == prev.page_id && row.rev_id <= prev.rev_id)) {
        throw FormatError(ctx + ": rows not sorted by (page_id, rev_id)");
      }
    }
    batch.rows.push_back(std::move(row));
  }
  return batch;
}

RevisionHashBatch read_hash_batch(const std::filesystem::path& path) {
  RevisionHashBatch batch;
  batch.descriptor = parse_batch_file_name(path.filename().string());
  if (batch.descriptor.output_type != OutputType::revision_hashes) {
    throw FormatError(path.filename().string() + ": not a revision_hashes batch");
  }
  std::ifstream raw;
  boost::iostreams::filtering_istream in;
  open_input(path, raw, in);
  CsvReader reader(in, path);
  expect_header(reader, kHashHeader, path);
  std::vector<std::string> fields;
  std::size_t line = 0;
  while (reader.next(fields, line)) {
    const std::string ctx = row_context(path, line);
    if (fields.size() != 3) {
      throw FormatError(ctx + ": expected 3 fields, got " + std::to_string(fields.size()));
    }
    RevisionHashRow row;
    row.page_id = parse_number<PageId>(fields[0], ctx);
    row.rev_id = parse_number<RevId>(fields[1], ctx);
    row.sha1 = fields[2];
    if (row.sha1.size() != 40 ||
        row.sha1.find_first_not_of("0123456789abcdef") != std::string::npos) {
      throw FormatError(ctx + ": bad sha1 '" + row.sha1 + "'");
    }
    batch.rows.push_back(std::move(row));
  }
  return batch;
}

}  // namespace toktrack
