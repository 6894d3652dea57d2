#include "gtube/error.hpp"

namespace gtube {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::input: return "input error";
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::integration_failure: return "integration failure";
    case ErrorKind::conditioning: return "conditioning error";
    case ErrorKind::pole: return "pole error";
    case ErrorKind::singularity: return "singularity error";
    case ErrorKind::convergence: return "convergence error";
    case ErrorKind::degeneracy: return "degeneracy error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::out_of_catalog: return "out-of-catalog error";
  }
  return "error";
}

}  // namespace gtube
