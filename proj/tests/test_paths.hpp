#pragma once

#include <cstdlib>
#include <string>

// Locations inside the build tree, injected at compile time.
inline std::string build_dir() { return LIFB_BUILD_DIR; }
inline std::string data_dir() { return build_dir() + "/data"; }
inline std::string cli_path() { return build_dir() + "/tools/lifb"; }

inline std::string temp_dir() {
    const char* t = std::getenv("TMPDIR");
    return t ? std::string(t) : std::string("/tmp");
}
