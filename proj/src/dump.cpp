#include "toktrack/dump.hpp"

#include <expat.h>

#include <boost/iostreams/device/file.hpp>
#include <boost/iostreams/filter/bzip2.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include <algorithm>
#include <charconv>
#include <cstring>
#include <deque>

#include "toktrack/hash.hpp"
#include "toktrack/time.hpp"
#include "toktrack/tokenizer.hpp"

namespace toktrack {

namespace {

// Invisible space-like code points wiki markup tolerates before #REDIRECT but
// that the locale does not class as whitespace (NBSP and friends, BOM).
bool is_invisible_space(char32_t cp) {
  switch (cp) {
    case 0x00a0: case 0x1680: case 0x180e:
    case 0x200b: case 0x202f: case 0x205f:
    case 0x3000: case 0xfeff:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

}  // namespace

bool is_redirect_text(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t prev = pos;
    bool valid;
    char32_t cp = decode_utf8(text, pos, valid);
    if (valid && (is_space_char(cp) || is_invisible_space(cp))) continue;
    pos = prev;
    break;
  }
  static constexpr std::string_view kDirective = "#redirect";
  if (text.size() - pos < kDirective.size()) return false;
  for (std::size_t i = 0; i < kDirective.size(); ++i) {
    char c = text[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    if (c != kDirective[i]) return false;
  }
  return true;
}

std::string_view page_skip_reason_name(PageSkipReason reason) {
  switch (reason) {
    case PageSkipReason::none: return "none";
    case PageSkipReason::wrong_namespace: return "wrong_namespace";
    case PageSkipReason::no_revisions: return "no_revisions";
    case PageSkipReason::latest_text_missing: return "latest_text_missing";
    case PageSkipReason::redirect: return "redirect";
  }
  throw std::logic_error("bad skip reason");
}

PageSkipReason page_skip_reason(const PageRecord& page) {
  if (page.ns != 0) return PageSkipReason::wrong_namespace;
  if (page.revisions.empty()) return PageSkipReason::no_revisions;
  const auto& latest = page.revisions.back();
  if (!latest.text.has_value()) return PageSkipReason::latest_text_missing;
  if (page.redirect_element || is_redirect_text(*latest.text)) return PageSkipReason::redirect;
  return PageSkipReason::none;
}

namespace {

std::unique_ptr<std::istream> open_dump_stream(const std::filesystem::path& path) {
  namespace io = boost::iostreams;
  io::file_source file(path.string(), std::ios::binary);
  if (!file.is_open()) throw DumpError("cannot open dump " + path.string());
  auto stream = std::make_unique<io::filtering_istream>();
  const std::string name = path.filename().string();
  if (name.ends_with(".bz2")) {
    stream->push(io::bzip2_decompressor());
  } else if (name.ends_with(".gz")) {
    stream->push(io::gzip_decompressor());
  }
  stream->push(file);
  return stream;
}

bool attr_deleted(const XML_Char** atts) {
  for (int i = 0; atts[i]; i += 2) {
    if (std::strcmp(atts[i], "deleted") == 0) return true;
  }
  return false;
}

}  // namespace

struct DumpReader::Impl {
  enum class Field {
    none,
    title,
    ns,
    page_id,
    rev_id,
    timestamp,
    contributor_id,
    contributor_name,
    contributor_ip,
    text,
    sha1,
  };

  XML_Parser parser = nullptr;
  std::unique_ptr<std::istream> input;
  std::vector<char> chunk = std::vector<char>(1 << 20);
  std::deque<PageRecord> ready;
  DumpCounters counters;
  std::string error;
  bool finished = false;

  // parse state
  bool in_page = false;
  bool in_revision = false;
  bool in_contributor = false;
  Field field = Field::none;
  std::string buf;
  PageRecord page;
  RevisionRecord rev;
  bool have_rev_id = false;
  bool have_timestamp = false;
  bool text_present = false;
  bool contributor_deleted = false;
  bool have_contributor_id = false;
  std::uint64_t contributor_id = 0;
  bool have_contributor_name = false;
  std::string contributor_name;
  bool have_contributor_ip = false;
  std::string contributor_ip;
  std::string rev_sha1_base36;

  void fail(const std::string& message) {
    if (error.empty()) {
      error = message + " near byte " +
              std::to_string(XML_GetCurrentByteIndex(parser));
    }
    XML_StopParser(parser, XML_FALSE);
  }

  void start_element(const XML_Char* name, const XML_Char** atts) {
    buf.clear();
    if (!in_page) {
      if (std::strcmp(name, "page") == 0) {
        in_page = true;
        page = PageRecord{};
      }
      return;
    }
    if (in_contributor) {
      if (std::strcmp(name, "id") == 0) field = Field::contributor_id;
      else if (std::strcmp(name, "username") == 0) field = Field::contributor_name;
      else if (std::strcmp(name, "ip") == 0) field = Field::contributor_ip;
      return;
    }
    if (in_revision) {
      if (std::strcmp(name, "id") == 0) field = Field::rev_id;
      else if (std::strcmp(name, "timestamp") == 0) field = Field::timestamp;
      else if (std::strcmp(name, "sha1") == 0) field = Field::sha1;
      else if (std::strcmp(name, "text") == 0) {
        if (attr_deleted(atts)) {
          text_present = false;
        } else {
          text_present = true;
          field = Field::text;
        }
      } else if (std::strcmp(name, "contributor") == 0) {
        in_contributor = true;
        contributor_deleted = attr_deleted(atts);
      }
      return;
    }
    if (std::strcmp(name, "title") == 0) field = Field::title;
    else if (std::strcmp(name, "ns") == 0) field = Field::ns;
    else if (std::strcmp(name, "id") == 0) field = Field::page_id;
    else if (std::strcmp(name, "redirect") == 0) page.redirect_element = true;
    else if (std::strcmp(name, "revision") == 0) {
      in_revision = true;
      rev = RevisionRecord{};
      have_rev_id = false;
      have_timestamp = false;
      text_present = false;
      contributor_deleted = false;
      have_contributor_id = false;
      have_contributor_name = false;
      have_contributor_ip = false;
      contributor_id = 0;
      contributor_name.clear();
      contributor_ip.clear();
      rev_sha1_base36.clear();
    }
  }

  template <typename T>
  bool parse_int(std::string_view s, T& out, const char* what) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      fail(std::string("bad ") + what + " '" + std::string(s) + "'");
      return false;
    }
    out = value;
    return true;
  }

  void end_element(const XML_Char* name) {
    switch (field) {
      case Field::title: page.title = buf; break;
      case Field::ns: parse_int(buf, page.ns, "namespace"); break;
      case Field::page_id: parse_int(buf, page.page_id, "page id"); break;
      case Field::rev_id:
        have_rev_id = parse_int(buf, rev.rev_id, "revision id");
        break;
      case Field::timestamp:
        try {
          rev.timestamp = parse_timestamp(buf);
          have_timestamp = true;
        } catch (const std::invalid_argument& e) {
          fail(e.what());
        }
        break;
      case Field::contributor_id:
        have_contributor_id = parse_int(buf, contributor_id, "contributor id");
        break;
      case Field::contributor_name:
        have_contributor_name = true;
        contributor_name = buf;
        break;
      case Field::contributor_ip:
        have_contributor_ip = true;
        contributor_ip = buf;
        break;
      case Field::text:
        rev.text = std::move(buf);
        buf = std::string();
        break;
      case Field::sha1: rev_sha1_base36 = buf; break;
      case Field::none: break;
    }
    field = Field::none;
    buf.clear();

    if (std::strcmp(name, "contributor") == 0 && in_contributor) {
      in_contributor = false;
    } else if (std::strcmp(name, "revision") == 0 && in_revision) {
      finish_revision();
      in_revision = false;
    } else if (std::strcmp(name, "page") == 0 && in_page) {
      finish_page();
      in_page = false;
    }
  }

  void finish_revision() {
    if (!have_rev_id || !have_timestamp) {
      fail("revision without id or timestamp on page " + std::to_string(page.page_id));
      return;
    }
    if (contributor_deleted) {
      rev.editor = EditorId::unregistered("");
    } else if (have_contributor_id && contributor_id > 0) {
      rev.editor = EditorId::registered_user(contributor_id);
    } else if (have_contributor_ip) {
      rev.editor = EditorId::unregistered(contributor_ip);
    } else if (have_contributor_name) {
      rev.editor = EditorId::unregistered(contributor_name);
    } else {
      rev.editor = EditorId::unregistered("");
    }
    if (rev.text.has_value()) {
      rev.sha1 = sha1_hex(*rev.text);
      if (!rev_sha1_base36.empty()) {
        try {
          if (sha1_base36_to_hex(rev_sha1_base36) != rev.sha1) ++counters.sha1_mismatches;
        } catch (const std::invalid_argument&) {
          ++counters.sha1_mismatches;
        }
      }
    } else {
      ++counters.suppressed_texts;
    }
    ++counters.revisions;
    page.revisions.push_back(std::move(rev));
    rev = RevisionRecord{};
  }

  void finish_page() {
    std::stable_sort(page.revisions.begin(), page.revisions.end(),
                     [](const RevisionRecord& a, const RevisionRecord& b) {
                       if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                       return a.rev_id < b.rev_id;
                     });
    ++counters.pages;
    ready.push_back(std::move(page));
    page = PageRecord{};
  }

  static void start_thunk(void* user, const XML_Char* name, const XML_Char** atts) {
    static_cast<Impl*>(user)->start_element(name, atts);
  }

  static void end_thunk(void* user, const XML_Char* name) {
    static_cast<Impl*>(user)->end_element(name);
  }

  static void char_thunk(void* user, const XML_Char* data, int len) {
    auto* impl = static_cast<Impl*>(user);
    if (impl->field != Field::none) {
      impl->buf.append(data, static_cast<std::size_t>(len));
    }
  }
};

DumpReader::DumpReader(const std::filesystem::path& path)
    : DumpReader(open_dump_stream(path)) {}

DumpReader::DumpReader(std::unique_ptr<std::istream> input) : impl_(new Impl) {
  impl_->input = std::move(input);
  impl_->parser = XML_ParserCreate(nullptr);
  if (!impl_->parser) throw DumpError("cannot create XML parser");
  XML_SetUserData(impl_->parser, impl_.get());
  XML_SetElementHandler(impl_->parser, &Impl::start_thunk, &Impl::end_thunk);
  XML_SetCharacterDataHandler(impl_->parser, &Impl::char_thunk);
}

DumpReader::~DumpReader() {
  if (impl_ && impl_->parser) XML_ParserFree(impl_->parser);
}

const DumpCounters& DumpReader::counters() const { return impl_->counters; }

std::optional<PageRecord> DumpReader::next_page() {
  auto& im = *impl_;
  while (im.ready.empty() && !im.finished) {
    std::streamsize n = 0;
    try {
      im.input->read(im.chunk.data(), static_cast<std::streamsize>(im.chunk.size()));
      n = im.input->gcount();
      if (n == 0 && im.input->bad()) throw DumpError("dump read failed");
    } catch (const DumpError&) {
      throw;
    } catch (const std::exception& e) {
      throw DumpError(std::string("dump decompression failed: ") + e.what());
    }
    const bool is_final = n == 0;
    if (XML_Parse(im.parser, im.chunk.data(), static_cast<int>(n), is_final) ==
        XML_STATUS_ERROR) {
      if (!im.error.empty()) throw DumpError(im.error);
      throw DumpError(std::string("malformed dump XML: ") +
                      XML_ErrorString(XML_GetErrorCode(im.parser)) + " near byte " +
                      std::to_string(XML_GetCurrentByteIndex(im.parser)));
    }
    if (!im.error.empty()) throw DumpError(im.error);
    if (is_final) im.finished = true;
  }
  if (!im.ready.empty()) {
    PageRecord out = std::move(im.ready.front());
    im.ready.pop_front();
    return out;
  }
  return std::nullopt;
}

}  // namespace toktrack
