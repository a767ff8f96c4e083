#pragma once

#include <stdexcept>
#include <string>

namespace rdflex {

// Maps onto the CLI exit codes: config 2, data 3, numerical 4.
enum class ErrorCategory { config, data, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string module, std::string kind, const std::string& what)
        : std::runtime_error("[" + module + "] " + kind + ": " + what),
          category_(category), module_(std::move(module)), kind_(std::move(kind)) {}

    ErrorCategory category() const noexcept { return category_; }
    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string module_;
    std::string kind_;
};

#define RDFLEX_DEFINE_ERROR(Name, Category)                                  \
    class Name : public Error {                                              \
    public:                                                                  \
        Name(const std::string& module, const std::string& what)             \
            : Error(ErrorCategory::Category, module, #Name, what) {}         \
    };

RDFLEX_DEFINE_ERROR(InsufficientSupport, numerical)
RDFLEX_DEFINE_ERROR(SingularDesign, numerical)
RDFLEX_DEFINE_ERROR(DegenerateCurvature, numerical)
RDFLEX_DEFINE_ERROR(WeakFirstStage, numerical)
RDFLEX_DEFINE_ERROR(StudyAborted, numerical)
RDFLEX_DEFINE_ERROR(InsufficientNeighbors, data)
RDFLEX_DEFINE_ERROR(DegenerateRunning, data)
RDFLEX_DEFINE_ERROR(NoTrainingData, data)
RDFLEX_DEFINE_ERROR(MissingColumn, data)
RDFLEX_DEFINE_ERROR(NonNumericCell, data)
RDFLEX_DEFINE_ERROR(EmptyAfterFiltering, data)
RDFLEX_DEFINE_ERROR(MissingTreatment, data)
RDFLEX_DEFINE_ERROR(InvalidArgument, config)
RDFLEX_DEFINE_ERROR(ConfigError, config)

#undef RDFLEX_DEFINE_ERROR

inline int exit_code(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numerical: return 4;
    }
    return 1;
}

}  // namespace rdflex
