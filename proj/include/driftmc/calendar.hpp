#pragma once

#include <array>
#include <chrono>
#include <string>
#include <string_view>

namespace driftmc {

enum class Season { W, S, SF };

inline constexpr std::array<Season, 3> kSeasons{Season::W, Season::S, Season::SF};

std::string_view season_name(Season s);
Season parse_season(std::string_view name);

/// Month-to-season rule: Jan-Mar winter, Jul-Sep summer, the rest shoulder.
struct SeasonCalendar {
  std::array<Season, 12> by_month{Season::W,  Season::W,  Season::W,  Season::SF,
                                  Season::SF, Season::SF, Season::S,  Season::S,
                                  Season::S,  Season::SF, Season::SF, Season::SF};

  Season season_of_month(unsigned month) const { return by_month.at(month - 1); }
};

/// Day zero of the fractional day axis used in trajectory files.
class Epoch {
 public:
  Epoch() : Epoch(std::chrono::year{2014} / std::chrono::March / 8) {}
  explicit Epoch(std::chrono::year_month_day ymd);

  /// Parses YYYY-MM-DD.
  static Epoch parse(std::string_view iso);

  std::chrono::year_month_day date_at(double days) const;
  double days_of(std::chrono::year_month_day ymd) const;
  Season season_at(double days, const SeasonCalendar& cal = {}) const;
  std::chrono::year_month_day date() const { return std::chrono::year_month_day{day0_}; }

 private:
  std::chrono::sys_days day0_;
};

std::string format_date(std::chrono::year_month_day ymd);

}  // namespace driftmc
