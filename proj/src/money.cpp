// Copyright 2026 The OSS-CRS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oss_crs/money.hpp"

#include <cctype>
#include <cstdlib>

#include "oss_crs/util.hpp"

namespace oss_crs {

namespace {

// Parses "<int>[.<frac>]" into an integer scaled by 10^scale_digits.
// Rejects negatives, empty parts, and fractions longer than scale_digits.
int64_t parse_scaled_decimal(const std::string& text, int scale_digits,
                             const char* what) {
  std::string s = trim(text);
  if (s.empty()) throw ConfigError(std::string(what) + ": empty value");
  if (s[0] == '-')
    throw ConfigError(std::string(what) + ": must be nonnegative: " + s);
  if (s[0] == '+') s = s.substr(1);
  auto parts = split(s, '.');
  if (parts.size() > 2 || parts[0].empty())
    throw ConfigError(std::string(what) + ": malformed decimal: " + text);
  std::string frac = parts.size() == 2 ? parts[1] : "";
  if (parts.size() == 2 && frac.empty())
    throw ConfigError(std::string(what) + ": malformed decimal: " + text);
  if (static_cast<int>(frac.size()) > scale_digits)
    throw ConfigError(std::string(what) + ": at most " +
                      std::to_string(scale_digits) +
                      " fractional digits: " + text);
  for (char c : parts[0] + frac)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ConfigError(std::string(what) + ": malformed decimal: " + text);
  int64_t scale = 1;
  for (int i = 0; i < scale_digits; ++i) scale *= 10;
  int64_t whole = std::strtoll(parts[0].c_str(), nullptr, 10);
  int64_t fval = 0;
  for (char c : frac) fval = fval * 10 + (c - '0');
  for (size_t i = frac.size(); i < static_cast<size_t>(scale_digits); ++i)
    fval *= 10;
  return whole * scale + fval;
}

}  // namespace

Cents parse_money_cents(const std::string& text) {
  return parse_scaled_decimal(text, 2, "dollar amount");
}

std::string format_cents(Cents cents) {
  bool neg = cents < 0;
  if (neg) cents = -cents;
  std::string out = std::to_string(cents / 100) + ".";
  int64_t frac = cents % 100;
  out += static_cast<char>('0' + frac / 10);
  out += static_cast<char>('0' + frac % 10);
  return neg ? "-" + out : out;
}

MicroDollars parse_price_micro(const std::string& text) {
  return parse_scaled_decimal(text, 6, "price");
}

std::string format_price_micro(MicroDollars micro) {
  std::string out = std::to_string(micro / 1000000);
  int64_t frac = micro % 1000000;
  if (frac == 0) return out;
  std::string f = std::to_string(frac);
  f.insert(f.begin(), 6 - f.size(), '0');
  while (!f.empty() && f.back() == '0') f.pop_back();
  return out + "." + f;
}

Cents request_cost_cents(int64_t prompt_tokens, MicroDollars price_in,
                         int64_t completion_tokens, MicroDollars price_out) {
  // tokens * micro-dollars-per-1M-tokens = pico-dollar-ish units; keep the
  // product in 128 bits, then half-up round micro-dollars to cents.
  __int128 micro_total =
      static_cast<__int128>(prompt_tokens) * price_in +
      static_cast<__int128>(completion_tokens) * price_out;
  // micro_total is in (micro-dollars * 1e6) units, i.e. dollars * 1e12.
  // Cents = dollars * 1e2, so divide by 1e10 with half-up rounding.
  const __int128 divisor = 10000000000LL;  // 1e10
  __int128 cents = (micro_total + divisor / 2) / divisor;
  return static_cast<Cents>(cents);
}

}  // namespace oss_crs
