#ifndef DEPTHGAZE_TEST_SUPPORT_HPP
#define DEPTHGAZE_TEST_SUPPORT_HPP

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/image_io.hpp"

namespace dgtest {

// Unique scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("dg_" + tag + "_" + std::to_string(++counter) + "_" +
                std::to_string(static_cast<unsigned>(::getpid())));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

inline depthgaze::Rgb8Image solid_rgb(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
    depthgaze::Rgb8Image img;
    img.r = depthgaze::Grid<uint8_t>(w, h, r);
    img.g = depthgaze::Grid<uint8_t>(w, h, g);
    img.b = depthgaze::Grid<uint8_t>(w, h, b);
    return img;
}

inline void write_video_frames(const std::string& root, const std::string& id,
                               const std::vector<depthgaze::Rgb8Image>& rgb,
                               const std::vector<depthgaze::Grid<uint16_t>>& depth) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(depthgaze::video_dir(root, id));
    fs::create_directories(dir / "rgb");
    fs::create_directories(dir / "depth");
    for (size_t i = 0; i < rgb.size(); ++i)
        depthgaze::write_png_rgb8((dir / "rgb" / depthgaze::frame_file_name(static_cast<int>(i))).string(),
                                  rgb[i]);
    for (size_t i = 0; i < depth.size(); ++i)
        depthgaze::write_png_gray16(
            (dir / "depth" / depthgaze::frame_file_name(static_cast<int>(i))).string(), depth[i]);
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline void write_fixations_csv(const std::string& root, const std::string& id,
                                const std::string& rows) {
    write_text(std::filesystem::path(depthgaze::video_dir(root, id)) / "fixations.csv",
               "frame,viewer,x,y\n" + rows);
}

inline void write_annotations_csv(const std::string& root, const std::string& id,
                                  const std::string& rows) {
    write_text(std::filesystem::path(depthgaze::video_dir(root, id)) / "annotations.csv",
               "frame,label,x,y,sigma\n" + rows);
}

} // namespace dgtest

#endif
