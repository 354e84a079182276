#include "tackscan/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "tackscan/error.hpp"

namespace tackscan::text {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw RuntimeFailure("could not format a number");
  return std::string(buf, end);
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

long long parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ValidationError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<double> parse_double_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  for (auto item : split(s, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, what));
  }
  return out;
}

}  // namespace tackscan::text
