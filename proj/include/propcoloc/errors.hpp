#ifndef PROPCOLOC_ERRORS_HPP
#define PROPCOLOC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace propcoloc {

// Malformed or inconsistent input (files, flags, dimensions). CLI exit code 2.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Statistical degeneracy: singular LD, non-PD weight matrix, zero trait-2
// signal at the selected variants, too few accepted Monte-Carlo draws.
// CLI exit code 3.
class degeneracy_error : public std::runtime_error {
public:
    explicit degeneracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace propcoloc

#endif
