#pragma once

namespace xmm::cli {

/// Entry point behind the `xmm` executable. Returns 0 on success, 1 on usage
/// errors and 2 on data errors.
int dispatch(int argc, const char* const* argv);

}  // namespace xmm::cli
