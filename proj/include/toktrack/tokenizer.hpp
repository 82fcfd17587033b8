#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace toktrack {

// Tokenization rules, applied uniformly everywhere text is split:
//  - whitespace (including newlines) delimits tokens and is never a token
//  - a character that is neither a word character nor whitespace is a
//    delimiter and becomes a single-character token of its own
//  - maximal runs of word characters (letters, digits, underscore) stay whole
//  - all tokens are lowercased (simple one-to-one folding)
//
// Bytes that do not form valid UTF-8 are kept as single-byte tokens so that
// no input content is ever dropped.
std::vector<std::string> tokenize(std::string_view text);

struct TokenizedSentence {
  std::vector<std::string> tokens;
};

struct TokenizedParagraph {
  std::vector<TokenizedSentence> sentences;
};

// Paragraphs are separated by two or more consecutive newline characters.
// Within a paragraph a sentence ends after '.', '!', '?' or a single
// newline. Sentences and paragraphs without any token are dropped, so the
// concatenation of all tokens equals tokenize() of the whole text.
std::vector<TokenizedParagraph> tokenize_structured(std::string_view text);

// Character classes used by the tokenizer (Unicode, via the C.UTF-8 locale).
bool is_word_char(char32_t cp);
bool is_space_char(char32_t cp);
char32_t fold_char(char32_t cp);

// Decodes one UTF-8 sequence at `pos`. Returns the code point and advances
// `pos`. Invalid bytes yield the byte value with `valid` set to false.
char32_t decode_utf8(std::string_view text, std::size_t& pos, bool& valid);

void encode_utf8(char32_t cp, std::string& out);

}  // namespace toktrack
