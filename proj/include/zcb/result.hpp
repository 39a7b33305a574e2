#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace zcb {

/// One engine price with diagnostics
struct PriceResult {
    std::string engine;
    double maturity = 0.0;
    double price = 0.0;
    double error_estimate = 0.0;  // stderr, tail bound or residual, engine-specific
    double wall_clock_ms = 0.0;
    std::map<std::string, double> settings;
    std::vector<std::string> warnings;
};

/// Wall-clock stopwatch in milliseconds
class Stopwatch {
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();

public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    }
};

}  // namespace zcb
