#include "rshe/build_info_fwd.hpp"

#include "rshe/build_info.hpp"

namespace rshe {

const char* build_describe() { return kBuildDescribe; }
const char* version_string() { return kVersion; }

}  // namespace rshe
