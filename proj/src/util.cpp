#include "spotsim/util.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace spotsim {

namespace timeutil {

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

bool all_of_digits(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  std::string s = trim_copy(text);
  if (s.empty()) throw DataError("empty timestamp");
  if (all_of_digits(s)) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
      throw DataError("bad epoch timestamp: " + s);
    }
    return v;
  }
  int year = 0, month = 0, day = 0, hh = 0, mm = 0;
  double ss = 0.0;
  int consumed = 0;
  // Accept both the 'T' and space separators.
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%lf%n", &year, &month,
                      &day, &hh, &mm, &ss, &consumed);
  if (n < 3) throw DataError("bad timestamp: " + s);
  if (n < 6) {
    // Date-only form.
    int c2 = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &year, &month, &day, &c2) != 3 ||
        static_cast<std::size_t>(c2) != s.size()) {
      throw DataError("bad timestamp: " + s);
    }
    hh = mm = 0;
    ss = 0.0;
    consumed = c2;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 ||
      ss >= 61.0) {
    throw DataError("timestamp out of range: " + s);
  }
  std::int64_t offset = 0;
  std::string_view rest = std::string_view(s).substr(consumed);
  if (!rest.empty()) {
    if (rest == "Z" || rest == "z") {
      offset = 0;
    } else if ((rest[0] == '+' || rest[0] == '-') &&
               (rest.size() == 6 || rest.size() == 5)) {
      int oh = 0, om = 0;
      const char* fmt = rest.size() == 6 ? "%3d:%2d" : "%3d%2d";
      if (std::sscanf(std::string(rest).c_str(), fmt, &oh, &om) != 2) {
        throw DataError("bad timezone offset: " + s);
      }
      offset = std::int64_t(oh) * 3600 + (oh < 0 ? -om : om) * 60;
    } else {
      throw DataError("trailing characters in timestamp: " + s);
    }
  }
  const std::int64_t days = days_from_civil(year, month, day);
  return days * 86400 + hh * 3600 + mm * 60 + static_cast<std::int64_t>(ss) -
         offset;
}

int utc_weekday(std::int64_t t) {
  std::int64_t days = t / 86400;
  if (t % 86400 < 0) --days;
  return static_cast<int>(((days % 7) + 11) % 7);  // epoch day 0 is a Thursday
}

bool is_utc_workday(std::int64_t t) {
  const int wd = utc_weekday(t);
  return wd >= 1 && wd <= 5;
}

int utc_hour(std::int64_t t) {
  std::int64_t sec = t % 86400;
  if (sec < 0) sec += 86400;
  return static_cast<int>(sec / 3600);
}

}  // namespace timeutil

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull + fnv1a64(tag);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(delim, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::string dtos(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) {
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
  }
  return std::string(buf, p);
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace spotsim
