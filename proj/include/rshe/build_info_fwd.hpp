#pragma once

namespace rshe {

// "git describe" of the source tree at configure time, or "unknown".
const char* build_describe();
const char* version_string();

}  // namespace rshe
