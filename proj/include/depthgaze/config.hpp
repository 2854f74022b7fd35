#ifndef DEPTHGAZE_CONFIG_HPP
#define DEPTHGAZE_CONFIG_HPP

#include <string>

#include "depthgaze/autoencoder.hpp"
#include "depthgaze/evaluation.hpp"
#include "depthgaze/transition.hpp"

namespace depthgaze {

// Every tunable of the pipeline in one document. Defaults live in the
// member initializers of the wrapped structs; a config file overrides only
// the keys it names, and unknown keys are rejected.
struct RunConfig {
    BaselineConfig baseline; // interval, thresholds, candidate/flow/saliency knobs
    SvmTrainConfig svm;
    NetShape net;
    AutoTrainConfig cnn;
    EvalConfig eval;
    int threads = 1;
};

// Parses the JSON document (must carry "version": 1). ParseError on
// unknown keys, wrong types, or a bad version; IoError when unreadable.
RunConfig load_config(const std::string& path);

// Full document with every key at its current value; loads back equal.
std::string config_json(const RunConfig& cfg);

} // namespace depthgaze

#endif
