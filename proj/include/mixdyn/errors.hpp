#pragma once

#include <stdexcept>
#include <string>

namespace mixdyn {

// Root of every error the library throws.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside a loss family's prediction or outcome domain.
class domain_error : public error {
public:
    using error::error;
};

// Invalid parameters or incompatible component pairing.
class config_error : public error {
public:
    using error::error;
};

// Calendar query on an expert before its start time.
class not_born_error : public error {
public:
    using error::error;
};

// n_index queried where no period lies strictly below t.
class undefined_index_error : public error {
public:
    using error::error;
};

// A scheme produced no resetter at some time step.
class scheme_integrity_error : public error {
public:
    using error::error;
};

// Engine-level invariant broken (e.g. all weights underflowed).
class invariant_violation : public error {
public:
    using error::error;
};

}  // namespace mixdyn
