#pragma once

#include <stdexcept>
#include <string>

namespace qlab {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define QLAB_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

QLAB_DEFINE_ERROR(SingularTransform);
QLAB_DEFINE_ERROR(PencilDegenerate);
QLAB_DEFINE_ERROR(NotReducible);
QLAB_DEFINE_ERROR(EtaViolated);
QLAB_DEFINE_ERROR(SubcaseHypothesisFailed);
QLAB_DEFINE_ERROR(CaseHypothesisFailed);
QLAB_DEFINE_ERROR(DegeneratePair);
QLAB_DEFINE_ERROR(EmptyCollection);
QLAB_DEFINE_ERROR(StepTooCoarse);
QLAB_DEFINE_ERROR(WrongTaxonomy);
QLAB_DEFINE_ERROR(EmptyCluster);
QLAB_DEFINE_ERROR(InsufficientData);
QLAB_DEFINE_ERROR(SchemaError);
QLAB_DEFINE_ERROR(CommandFailed);
QLAB_DEFINE_ERROR(InvalidArgument);

#undef QLAB_DEFINE_ERROR

} // namespace qlab
