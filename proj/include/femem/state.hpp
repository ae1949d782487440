#pragma once

#include <cstdint>

namespace femem {

/// Normalized device state. w = 1 is the LRS (polarization toward the
/// semiconductor), w = 0 the HRS.
struct DeviceState {
    double w = 0.0;
    double d2d_log10 = 0.0;      // offset on log10 R, common to all states
    std::uint64_t cycles = 0;    // polarity reversals seen so far
    std::int8_t last_polarity = 0;  // +1 potentiation, -1 depression, 0 none yet
    bool broken = false;

    friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

}  // namespace femem
