#include "noiselab/error.hpp"

namespace noiselab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::argument: return "argument";
        case ErrorKind::format: return "format";
        case ErrorKind::range: return "range";
        case ErrorKind::usage: return "usage";
        case ErrorKind::data: return "data";
        case ErrorKind::training: return "training";
        case ErrorKind::run: return "run";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace noiselab
