#pragma once

#include <stdexcept>
#include <string>

namespace bdssep {

// Failure taxonomy shared by the whole library. The CLI maps kinds to exit
// codes: validation-type kinds -> 2, runtime numerics -> 3.
enum class errc {
    validation,  // bad parameters, incompatible grids, malformed input
    capacity,    // request exceeds a configured size cap
    numerical,   // solver residual, non-convergence, degenerate data
    horizon      // simulation horizon exhausted
};

class error : public std::runtime_error {
  public:
    error(errc kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] errc kind() const noexcept { return kind_; }

  private:
    errc kind_;
};

inline void require(bool cond, errc kind, const std::string& what) {
    if (!cond) throw error(kind, what);
}

}  // namespace bdssep
