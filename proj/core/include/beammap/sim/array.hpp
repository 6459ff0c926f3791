#pragma once

#include <complex>
#include <vector>

namespace beammap::sim {

using cplx = std::complex<double>;

// Uniform linear transmit array. Spacing is in wavelengths.
struct ArrayConfig {
    std::size_t n_antennas = 8;
    double element_spacing = 0.5;
};

// Steering vector a(phi): element k = exp(-i * 2*pi * spacing * k * sin(phi)).
// Unnormalized, so |a|^2 = n_antennas.
std::vector<cplx> steering_vector(double aod, const ArrayConfig& cfg);

// Unitary DFT beam codebook: beam j element k = exp(i*2*pi*j*k/N) / sqrt(N).
struct Codebook {
    std::vector<std::vector<cplx>> beams;

    std::size_t size() const { return beams.size(); }
};

Codebook dft_codebook(const ArrayConfig& cfg);

// |a^H w|^2 for equal-length vectors.
double beam_alignment_gain(const std::vector<cplx>& a, const std::vector<cplx>& w);

}  // namespace beammap::sim
