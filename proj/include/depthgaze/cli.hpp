#ifndef DEPTHGAZE_CLI_HPP
#define DEPTHGAZE_CLI_HPP

#include <string>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/maps.hpp"

namespace depthgaze {

// Runs one subcommand. Returns the process exit code: 0 success, 1 usage
// error, 2 data error, 3 numeric failure.
int cli_dispatch(int argc, char** argv);

// Blends each frame with a heat-colored saliency layer, alpha scaled by the
// local saliency up to 0.5 at the map maximum (a zero map reproduces the
// frame exactly), and writes one PNG per frame. MissingPredictions when the
// prediction count differs from the frame count.
void render_overlays(const VideoSequence& video, const std::vector<SaliencyMap>& predictions,
                     const std::string& out_dir);

} // namespace depthgaze

#endif
