#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace stratport {

/// Calendar date stored as days since 1970-01-01; text form is ISO 8601.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(int serial) : serial_(serial) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses "YYYY-MM-DD"; throws InputError on anything else.
    static Date parse(std::string_view text);

    constexpr int serial() const { return serial_; }
    int weekday() const;  // 0 = Sunday
    std::string str() const;

    friend constexpr auto operator<=>(Date, Date) = default;

private:
    int serial_ = 0;
};

/// Closed date interval [first, last].
struct DateRange {
    Date first;
    Date last;

    bool contains(Date d) const { return first <= d && d <= last; }
    bool overlaps(const DateRange& other) const {
        return !(last < other.first || other.last < first);
    }
};

}  // namespace stratport
