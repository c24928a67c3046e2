#pragma once

#include <spdlog/logger.h>

namespace syntaxlens::detail {

/// Library logger; always writes to standard error.
spdlog::logger& log();

}  // namespace syntaxlens::detail
