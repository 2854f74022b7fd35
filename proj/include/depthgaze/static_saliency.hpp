#ifndef DEPTHGAZE_STATIC_SALIENCY_HPP
#define DEPTHGAZE_STATIC_SALIENCY_HPP

#include "depthgaze/dataset.hpp"
#include "depthgaze/maps.hpp"

namespace depthgaze {

struct GraphSaliencyParams {
    int lattice_factor = 4;   // downsample factor from frame to graph lattice
    double sigma = 4.0;       // spatial decay of edge weights, lattice units
    double eps = 1e-4;        // weight floor keeping the chain ergodic
    double residual = 1e-8;   // L1 convergence threshold for power iteration
    int max_iters = 1000;
};

// Contrast saliency via the equilibrium of a Markov chain on a lattice
// graph: edge weights grow with feature dissimilarity and decay with
// toroidal lattice distance, so featureless frames equilibrate to an
// exactly uniform map. Channels (intensity, two color opponencies, and
// depth when enabled) contribute equally. Output is max-normalized.
SaliencyMap graph_saliency(const RgbdFrame& frame, bool use_depth);
SaliencyMap graph_saliency(const RgbdFrame& frame, bool use_depth,
                           const GraphSaliencyParams& params);

} // namespace depthgaze

#endif
