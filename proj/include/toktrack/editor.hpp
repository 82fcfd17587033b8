#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace toktrack {

// Editor identity as stored in the dataset.
//
// Registered editors are identified by their positive numeric user id and
// serialize as that decimal number. Unregistered editors (IP edits, imports
// without a user id, suppressed contributors) serialize as "0|<identifier>",
// and two unregistered editors are the same editor only when the full
// serialized string matches.
struct EditorId {
  enum class Kind { registered, unregistered };

  Kind kind = Kind::unregistered;
  std::string value;  // full serialized form

  static EditorId registered_user(std::uint64_t user_id);
  static EditorId unregistered(std::string_view identifier);

  // Parses a serialized editor field. Throws std::invalid_argument on
  // anything that is neither a positive integer nor a "0|..." literal.
  static EditorId parse(std::string_view field);

  bool is_registered() const { return kind == Kind::registered; }

  // Numeric user id; only valid for registered editors.
  std::uint64_t user_id() const;

  bool operator==(const EditorId& other) const { return value == other.value; }
  bool operator!=(const EditorId& other) const { return value != other.value; }
};

}  // namespace toktrack
