#include "toktrack/tokenizer.hpp"

#include <locale.h>
#include <wctype.h>

#include <stdexcept>

namespace toktrack {

namespace {

locale_t utf8_locale() {
  static locale_t loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      if (locale_t l = newlocale(LC_CTYPE_MASK, name, static_cast<locale_t>(nullptr))) return l;
    }
    throw std::runtime_error("no UTF-8 locale available");
  }();
  return loc;
}

enum class CharClass { word, space, special };

CharClass classify(char32_t cp, bool valid) {
  if (!valid) return CharClass::special;
  if (cp < 0x80) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_')
      return CharClass::word;
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0d)) return CharClass::space;
    return CharClass::special;
  }
  if (iswalnum_l(static_cast<wint_t>(cp), utf8_locale())) return CharClass::word;
  if (iswspace_l(static_cast<wint_t>(cp), utf8_locale())) return CharClass::space;
  return CharClass::special;
}

}  // namespace

bool is_word_char(char32_t cp) { return classify(cp, true) == CharClass::word; }

bool is_space_char(char32_t cp) { return classify(cp, true) == CharClass::space; }

char32_t fold_char(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  return static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), utf8_locale()));
}

char32_t decode_utf8(std::string_view text, std::size_t& pos, bool& valid) {
  const auto* p = reinterpret_cast<const unsigned char*>(text.data());
  std::size_t n = text.size();
  unsigned char b0 = p[pos];
  valid = true;
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  auto cont = [&](std::size_t i) { return i < n && (p[i] & 0xc0) == 0x80; };
  if (b0 >= 0xc2 && b0 <= 0xdf && cont(pos + 1)) {
    char32_t cp = ((b0 & 0x1fu) << 6) | (p[pos + 1] & 0x3fu);
    pos += 2;
    return cp;
  }
  if (b0 >= 0xe0 && b0 <= 0xef && cont(pos + 1) && cont(pos + 2)) {
    char32_t cp = ((b0 & 0x0fu) << 12) | ((p[pos + 1] & 0x3fu) << 6) | (p[pos + 2] & 0x3fu);
    if (cp >= 0x800 && !(cp >= 0xd800 && cp <= 0xdfff)) {
      pos += 3;
      return cp;
    }
  }
  if (b0 >= 0xf0 && b0 <= 0xf4 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
    char32_t cp = ((b0 & 0x07u) << 18) | ((p[pos + 1] & 0x3fu) << 12) |
                  ((p[pos + 2] & 0x3fu) << 6) | (p[pos + 3] & 0x3fu);
    if (cp >= 0x10000 && cp <= 0x10ffff) {
      pos += 4;
      return cp;
    }
  }
  valid = false;
  ++pos;
  return b0;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

namespace {

// Core scan shared by the flat and structured tokenizers. Calls sink(token)
// for every token in order.
template <typename Sink>
void scan_tokens(std::string_view text, Sink&& sink) {
  std::string word;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!word.empty()) {
      sink(std::move(word));
      word.clear();
    }
  };
  while (pos < text.size()) {
    std::size_t start = pos;
    bool valid;
    char32_t cp = decode_utf8(text, pos, valid);
    switch (classify(cp, valid)) {
      case CharClass::word:
        encode_utf8(fold_char(cp), word);
        break;
      case CharClass::space:
        flush();
        break;
      case CharClass::special: {
        flush();
        std::string tok;
        if (valid) {
          encode_utf8(fold_char(cp), tok);
        } else {
          tok.assign(text.substr(start, 1));
        }
        sink(std::move(tok));
        break;
      }
    }
  }
  flush();
}

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?' || c == '\n'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  scan_tokens(text, [&](std::string&& tok) { tokens.push_back(std::move(tok)); });
  return tokens;
}

std::vector<TokenizedParagraph> tokenize_structured(std::string_view text) {
  std::vector<TokenizedParagraph> paragraphs;
  std::size_t para_begin = 0;
  auto emit_paragraph = [&](std::string_view para) {
    TokenizedParagraph out;
    std::size_t sent_begin = 0;
    auto emit_sentence = [&](std::string_view sent) {
      TokenizedSentence ts;
      scan_tokens(sent, [&](std::string&& tok) { ts.tokens.push_back(std::move(tok)); });
      if (!ts.tokens.empty()) out.sentences.push_back(std::move(ts));
    };
    for (std::size_t i = 0; i < para.size(); ++i) {
      if (is_sentence_end(para[i])) {
        emit_sentence(para.substr(sent_begin, i + 1 - sent_begin));
        sent_begin = i + 1;
      }
    }
    if (sent_begin < para.size()) emit_sentence(para.substr(sent_begin));
    if (!out.sentences.empty()) paragraphs.push_back(std::move(out));
  };
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
      emit_paragraph(text.substr(para_begin, i - para_begin));
      while (i < text.size() && text[i] == '\n') ++i;
      para_begin = i;
    } else {
      ++i;
    }
  }
  if (para_begin < text.size()) emit_paragraph(text.substr(para_begin));
  return paragraphs;
}

}  // namespace toktrack
