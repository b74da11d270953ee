#pragma once

#include <cstdint>

#include "otpsi/common.hpp"

namespace otpsi {

enum class Deployment : uint8_t { NonInteractive = 0, CollusionSafe = 1 };

/// Session-wide protocol parameters, agreed before any table is built.
/// All participants use identical geometry: table_count sub-tables of
/// max_set_size * threshold bins each.
struct SessionParams {
    uint32_t n_participants = 0;
    uint16_t threshold = 0;
    uint64_t max_set_size = 0;
    uint16_t n_key_holders = 0;  // collusion-safe only
    uint64_t round_id = 0;
    uint16_t table_count = 20;
    Deployment deployment = Deployment::NonInteractive;

    uint32_t bin_count() const { return uint32_t(max_set_size * threshold); }

    void validate() const {
        if (threshold < 2) throw ConfigError("threshold must be at least 2");
        if (threshold > n_participants) throw ConfigError("threshold exceeds participant count");
        if (max_set_size < 1) throw ConfigError("max set size must be positive");
        if (table_count < 1) throw ConfigError("table count must be positive");
        if (max_set_size * threshold > 0xffffffffULL) throw ConfigError("bin count overflows");
        if (deployment == Deployment::CollusionSafe && n_key_holders < 1)
            throw ConfigError("collusion-safe deployment needs at least one key holder");
    }
};

}  // namespace otpsi
