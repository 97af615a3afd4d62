// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace ttuq::log {

void info(std::string_view msg);
void warn(std::string_view msg);
void debug(std::string_view msg);
// "off", "warn", "info", "debug"; also read from TTUQ_LOG at first use
void set_level(std::string_view level);

}  // namespace ttuq::log
