#ifndef BUBBLELOJA_ERRORS_HPP
#define BUBBLELOJA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bubbleloja {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define BUBBLELOJA_DEFINE_ERROR(Name)                                  \
    struct Name : Error {                                              \
        explicit Name(const std::string& what) : Error(what) {}        \
    }

BUBBLELOJA_DEFINE_ERROR(UnitAreaViolation);
BUBBLELOJA_DEFINE_ERROR(ResolutionError);
BUBBLELOJA_DEFINE_ERROR(MeanZeroRequired);
BUBBLELOJA_DEFINE_ERROR(ShapeError);
BUBBLELOJA_DEFINE_ERROR(ChartDomainError);
BUBBLELOJA_DEFINE_ERROR(GeometryError);
BUBBLELOJA_DEFINE_ERROR(UnderResolvedBubble);
BUBBLELOJA_DEFINE_ERROR(DegenerateFrame);
BUBBLELOJA_DEFINE_ERROR(ProjectionDiverged);
BUBBLELOJA_DEFINE_ERROR(LeftBubbleRegime);
BUBBLELOJA_DEFINE_ERROR(EigsNotConverged);
BUBBLELOJA_DEFINE_ERROR(WrongRegime);
BUBBLELOJA_DEFINE_ERROR(DegeneratePair);
BUBBLELOJA_DEFINE_ERROR(FitDomainError);
BUBBLELOJA_DEFINE_ERROR(FlowStalled);
BUBBLELOJA_DEFINE_ERROR(ConfigError);
// Raised when the residual mean of a density exceeds the aliasing watermark.
BUBBLELOJA_DEFINE_ERROR(DealiasDiagnostic);

#undef BUBBLELOJA_DEFINE_ERROR

}  // namespace bubbleloja

#endif
