#include "toktrack/editor.hpp"

#include <stdexcept>

namespace toktrack {

EditorId EditorId::registered_user(std::uint64_t user_id) {
  if (user_id == 0) throw std::invalid_argument("registered user id must be positive");
  return EditorId{Kind::registered, std::to_string(user_id)};
}

EditorId EditorId::unregistered(std::string_view identifier) {
  return EditorId{Kind::unregistered, "0|" + std::string(identifier)};
}

EditorId EditorId::parse(std::string_view field) {
  if (field.size() >= 2 && field[0] == '0' && field[1] == '|') {
    return EditorId{Kind::unregistered, std::string(field)};
  }
  if (field.empty()) throw std::invalid_argument("empty editor field");
  std::uint64_t id = 0;
  for (char c : field) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad editor field: " + std::string(field));
    std::uint64_t next = id * 10 + static_cast<std::uint64_t>(c - '0');
    if (next < id) throw std::invalid_argument("editor id overflow: " + std::string(field));
    id = next;
  }
  if (id == 0) throw std::invalid_argument("bad editor field: " + std::string(field));
  return EditorId{Kind::registered, std::string(field)};
}

std::uint64_t EditorId::user_id() const {
  if (kind != Kind::registered) throw std::logic_error("user_id() on unregistered editor");
  return std::stoull(value);
}

}  // namespace toktrack
