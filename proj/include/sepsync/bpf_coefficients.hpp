// Generated by tools/design_bpf.py; do not edit by hand.
#pragma once

#include <array>

namespace sepsync::bpf {

inline constexpr double kDesignSampleRateHz = 333.0;
inline constexpr double kPassbandLowHz = 45.0;
inline constexpr double kPassbandHighHz = 55.0;

struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

inline constexpr std::array<Biquad, 3> kSections = {{
    {0.000701331495673941, 0.001402662991347882, 0.000701331495673941, -1.0773459643074454, 0.827113050496618},
    {1.0, 0.0, -1.0, -0.9897239638784863, 0.9051307685877014},
    {1.0, -2.0, 1.0, -1.248601214699727, 0.9153547114310558},
}};

}  // namespace sepsync::bpf
