#ifndef WESTFEM_ERRORS_HPP
#define WESTFEM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace westfem {

// Loss of positivity of the factor multiplying the second time derivative,
// (1 - 2ku) or (1 - 2k~ u_t) depending on the formulation.
class DegeneracyError : public std::runtime_error {
public:
    DegeneracyError(double time, double margin, const std::string& what_happened)
        : std::runtime_error(what_happened), time_(time), margin_(margin) {}
    double time() const { return time_; }
    double margin() const { return margin_; }

private:
    double time_;
    double margin_;
};

class SolverError : public std::runtime_error {
public:
    SolverError(double time, const std::string& msg)
        : std::runtime_error(msg), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace westfem

#endif
