#include "driftmc/calendar.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "driftmc/error.hpp"

namespace driftmc {

std::string_view season_name(Season s) {
  switch (s) {
    case Season::W:
      return "W";
    case Season::S:
      return "S";
    case Season::SF:
      return "SF";
  }
  return "?";
}

Season parse_season(std::string_view name) {
  if (name == "W") return Season::W;
  if (name == "S") return Season::S;
  if (name == "SF") return Season::SF;
  throw InputError("unknown season label '" + std::string(name) + "'");
}

Epoch::Epoch(std::chrono::year_month_day ymd) {
  if (!ymd.ok()) throw InputError("invalid epoch date");
  day0_ = std::chrono::sys_days{ymd};
}

Epoch Epoch::parse(std::string_view iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { return InputError("expected date as YYYY-MM-DD, got '" + std::string(iso) + "'"); };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
  auto parse_part = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(iso.data() + pos, iso.data() + pos + len, out);
    if (ec != std::errc{} || p != iso.data() + pos + len) throw bad();
  };
  parse_part(0, 4, y);
  parse_part(5, 2, m);
  parse_part(8, 2, d);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Epoch(ymd);
}

std::chrono::year_month_day Epoch::date_at(double days) const {
  return std::chrono::year_month_day{day0_ + std::chrono::days{static_cast<long>(std::floor(days))}};
}

double Epoch::days_of(std::chrono::year_month_day ymd) const {
  return static_cast<double>((std::chrono::sys_days{ymd} - day0_).count());
}

Season Epoch::season_at(double days, const SeasonCalendar& cal) const {
  return cal.season_of_month(static_cast<unsigned>(date_at(days).month()));
}

std::string format_date(std::chrono::year_month_day ymd) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace driftmc
