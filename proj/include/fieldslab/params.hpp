#pragma once

#include "fieldslab/lattice.hpp"

namespace fieldslab {

// sigma: -1 exclusion, 0 independent walkers, +1 inclusion.
// bond_rate multiplies N^2 on every directed bond. At the default 1/2 the
// one-particle generator is (alpha/2) times the nearest-neighbour Laplacian,
// which is the normalization of the scaling limits. bond_rate = 1 gives the
// literal N^2 eta(x)(alpha + sigma eta(y)) rates.
struct ModelParams {
    int sigma = 0;
    int alpha = 1;
    int d = 1;
    int N = 16;
    double bond_rate = 0.5;

    Torus torus() const { return Torus(d, N); }
    double time_scale() const { return bond_rate * static_cast<double>(N) * N; }
    // Macroscopic diffusivity: the limit generator is D * Laplacian.
    double diffusivity() const { return bond_rate * alpha; }
    void validate() const;
};

// Mobility factor theta(1 + sigma theta) and range check for theta.
void validate_theta(int sigma, int alpha, double theta);

}  // namespace fieldslab
