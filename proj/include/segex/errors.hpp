#ifndef SEGEX_ERRORS_HPP
#define SEGEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace segex {

// Data/runtime problems (CLI exit code 1) vs. configuration/usage problems
// (CLI exit code 2). EmptyPeriod maps to exit code 2: an empty input window
// almost always means a misconfigured period or the wrong file.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SEGEX_ERROR(Name, Base)                                              \
    class Name : public Base {                                               \
    public:                                                                  \
        using Base::Base;                                                    \
    }

// ingest
SEGEX_ERROR(TooManyMalformed, DataError);
SEGEX_ERROR(EmptyPeriod, ConfigError);
SEGEX_ERROR(ArmConflict, DataError);
SEGEX_ERROR(MissingArm, DataError);

// features
SEGEX_ERROR(MissingColumn, DataError);
SEGEX_ERROR(AllRemoved, DataError);
SEGEX_ERROR(NegativeValue, DataError);
SEGEX_ERROR(ConstantColumn, DataError);
SEGEX_ERROR(ColumnMismatch, DataError);
SEGEX_ERROR(StageError, DataError);

// cluster
SEGEX_ERROR(TooFewPoints, DataError);
SEGEX_ERROR(DimensionMismatch, DataError);
SEGEX_ERROR(DegenerateVariance, DataError);
SEGEX_ERROR(EmptyCluster, DataError);
SEGEX_ERROR(KTooSmall, DataError);

// experiment
SEGEX_ERROR(OneArmOnly, DataError);
SEGEX_ERROR(NoOverallEffect, DataError);
SEGEX_ERROR(ZeroGrandTotal, DataError);

// synth
SEGEX_ERROR(InvalidSpec, ConfigError);
SEGEX_ERROR(UnknownArchetype, ConfigError);

// model persistence
SEGEX_ERROR(VersionMismatch, DataError);
SEGEX_ERROR(ModelFormatError, DataError);

#undef SEGEX_ERROR

} // namespace segex

#endif
