#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "bacip/bytes.hpp"

namespace bacip {

// Byte source behind every operation that needs randomness. Tests pass a
// seeded DeterministicRng; production code uses SystemRng.
class RandomSource {
public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<uint8_t> out) = 0;

    Bytes bytes(size_t n) {
        Bytes out(n);
        fill(out);
        return out;
    }

    uint64_t next_u64() {
        uint8_t buf[8];
        fill(buf);
        uint64_t v = 0;
        for (uint8_t b : buf) v = (v << 8) | b;
        return v;
    }
};

class DeterministicRng final : public RandomSource {
public:
    explicit DeterministicRng(uint64_t seed) : engine_(seed) {}

    void fill(std::span<uint8_t> out) override {
        for (auto& b : out) b = static_cast<uint8_t>(engine_());
    }

private:
    std::mt19937_64 engine_;
};

// OS-backed CSPRNG (OpenSSL RAND_bytes).
class SystemRng final : public RandomSource {
public:
    void fill(std::span<uint8_t> out) override;
};

}  // namespace bacip
