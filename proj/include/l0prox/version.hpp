#pragma once

namespace l0prox {

/// Library version, embedded in every JSON report.
inline constexpr const char* version_string = "0.1.0";

}  // namespace l0prox
