#!/usr/bin/env python3
"""Regenerates include/sepsync/bpf_coefficients.hpp.

Butterworth band-pass, 45-55 Hz, designed for a 333 Hz ADC rate and emitted
as second-order sections (b0 b1 b2 a1 a2, a0 normalized to 1).

    python3 tools/design_bpf.py > include/sepsync/bpf_coefficients.hpp
"""
from scipy import signal

SAMPLE_RATE_HZ = 333.0
PASSBAND_HZ = (45.0, 55.0)
PROTOTYPE_ORDER = 3  # band-pass order is twice this

sos = signal.butter(PROTOTYPE_ORDER, PASSBAND_HZ, btype="band",
                    fs=SAMPLE_RATE_HZ, output="sos")

print("// Generated by tools/design_bpf.py; do not edit by hand.")
print("#pragma once")
print()
print("#include <array>")
print()
print("namespace sepsync::bpf {")
print()
print(f"inline constexpr double kDesignSampleRateHz = {SAMPLE_RATE_HZ};")
print(f"inline constexpr double kPassbandLowHz = {PASSBAND_HZ[0]};")
print(f"inline constexpr double kPassbandHighHz = {PASSBAND_HZ[1]};")
print()
print("struct Biquad {")
print("  double b0, b1, b2;")
print("  double a1, a2;")
print("};")
print()
print(f"inline constexpr std::array<Biquad, {len(sos)}> kSections = {{{{")
for s in sos:
    b0, b1, b2, a0, a1, a2 = (float(v) for v in s)
    assert a0 == 1.0
    print(f"    {{{b0!r}, {b1!r}, {b2!r}, {a1!r}, {a2!r}}},")
print("}};")
print()
print("}  // namespace sepsync::bpf")
