// SPDX-License-Identifier: Apache-2.0
#include "ttuq/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <memory>
#include <string>

namespace ttuq::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> lg = [] {
    auto l = spdlog::stderr_color_mt("ttuq");
    l->set_pattern("[%l] %v");
    l->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("TTUQ_LOG")) l->set_level(spdlog::level::from_str(env));
    return l;
  }();
  return lg;
}

}  // namespace

void info(std::string_view msg) { logger()->info(msg); }
void warn(std::string_view msg) { logger()->warn(msg); }
void debug(std::string_view msg) { logger()->debug(msg); }
void set_level(std::string_view level) { logger()->set_level(spdlog::level::from_str(std::string(level))); }

}  // namespace ttuq::log
