#pragma once

#include <string>
#include <string_view>

#include "toktrack/types.hpp"

namespace toktrack {

// Parses a strict "YYYY-MM-DDThh:mm:ssZ" timestamp.
// Throws std::invalid_argument on any deviation (shape, range, impossible date).
UtcSeconds parse_timestamp(std::string_view text);

// Inverse of parse_timestamp. Valid for years 1..9999.
std::string format_timestamp(UtcSeconds seconds);

struct YearMonth {
  int year = 0;
  int month = 0;  // 1..12

  auto operator<=>(const YearMonth&) const = default;
};

// Calendar month (UTC) containing the given instant.
YearMonth year_month_of(UtcSeconds seconds);

// "YYYY-MM"
std::string format_year_month(YearMonth ym);

}  // namespace toktrack
