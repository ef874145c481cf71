#include "stratport/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "stratport/error.hpp"

namespace stratport {

namespace {

int parse_field(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw InputError("malformed date '" + std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw InputError("invalid calendar date " + std::to_string(year) + "-" +
                         std::to_string(month) + "-" + std::to_string(day));
    }
    serial_ = static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw InputError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    const int y = parse_field(text.substr(0, 4), text);
    const int m = parse_field(text.substr(5, 2), text);
    const int d = parse_field(text.substr(8, 2), text);
    if (m < 1 || d < 1) throw InputError("malformed date '" + std::string(text) + "'");
    return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

int Date::weekday() const {
    const std::chrono::weekday wd{std::chrono::sys_days{std::chrono::days{serial_}}};
    return static_cast<int>(wd.c_encoding());
}

std::string Date::str() const {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{serial_}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace stratport
