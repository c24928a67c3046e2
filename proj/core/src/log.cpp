#include "log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace syntaxlens::detail {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    if (auto existing = spdlog::get("syntaxlens")) return existing;
    return spdlog::stderr_color_mt("syntaxlens");
  }();
  return *logger;
}

}  // namespace syntaxlens::detail
