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

#ifndef OSS_CRS_MONEY_HPP_
#define OSS_CRS_MONEY_HPP_

#include <cstdint>
#include <string>

namespace oss_crs {

// Dollar amounts are held as integer cents. All budget arithmetic is exact;
// binary floating point never touches a ledger.
using Cents = int64_t;

// Parses a nonnegative decimal dollar amount with at most two fractional
// digits ("50", "50.5", "0.05"). Throws ConfigError otherwise.
Cents parse_money_cents(const std::string& text);

// "12.34" style rendering, always two fractional digits.
std::string format_cents(Cents cents);

// Model prices are dollars per 1M tokens, held as integer micro-dollars
// (at most six fractional digits in the source text).
using MicroDollars = int64_t;

MicroDollars parse_price_micro(const std::string& text);

std::string format_price_micro(MicroDollars micro);

// Request cost: tokens * price / 1e6 dollars per side, summed, rounded
// half-up to the cent.
Cents request_cost_cents(int64_t prompt_tokens, MicroDollars price_in,
                         int64_t completion_tokens, MicroDollars price_out);

}  // namespace oss_crs

#endif  // OSS_CRS_MONEY_HPP_
