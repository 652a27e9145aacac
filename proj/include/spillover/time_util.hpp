#pragma once

#include <chrono>
#include <cstdint>
#include <string>

namespace spillover {

// All timestamps are UTC epoch seconds; days are UTC calendar days.
constexpr std::int64_t kSecondsPerDay = 86400;

inline std::int64_t day_of(std::int64_t epoch_seconds) {
    // floor division, epoch_seconds may predate 1970 in pathological dumps
    std::int64_t d = epoch_seconds / kSecondsPerDay;
    if (epoch_seconds % kSecondsPerDay < 0) --d;
    return d;
}

struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    bool operator==(const YearMonth&) const = default;
    auto operator<=>(const YearMonth&) const = default;

    YearMonth prev() const {
        return month == 1 ? YearMonth{year - 1, 12} : YearMonth{year, month - 1};
    }
};

inline YearMonth year_month_of_day(std::int64_t day) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{day}}};
    return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

inline YearMonth year_month_of(std::int64_t epoch_seconds) {
    return year_month_of_day(day_of(epoch_seconds));
}

// First day (days since epoch) of the given month.
inline std::int64_t first_day_of_month(YearMonth ym) {
    using namespace std::chrono;
    sys_days d = sys_days{year{ym.year} / month{static_cast<unsigned>(ym.month)} / day{1}};
    return d.time_since_epoch().count();
}

inline std::string iso_date(std::int64_t day) {
    using namespace std::chrono;
    year_month_day ymd{sys_days{days{day}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace spillover
