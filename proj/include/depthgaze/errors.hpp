#ifndef DEPTHGAZE_ERRORS_HPP
#define DEPTHGAZE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace depthgaze {

// Base class for all toolkit errors. `DataError` covers malformed or
// inconsistent inputs (CLI exit code 2), `NumericError` covers numeric
// breakdown such as a non-finite training loss (CLI exit code 3).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

#define DEPTHGAZE_DATA_ERROR(NAME)                                     \
    class NAME : public DataError {                                    \
    public:                                                            \
        explicit NAME(const std::string& msg) : DataError(#NAME ": " + msg) {} \
    }

// dataset_io
DEPTHGAZE_DATA_ERROR(MissingFrame);
DEPTHGAZE_DATA_ERROR(DimensionMismatch);
DEPTHGAZE_DATA_ERROR(CorruptFile);
DEPTHGAZE_DATA_ERROR(ParseError);
DEPTHGAZE_DATA_ERROR(OutOfRange);
DEPTHGAZE_DATA_ERROR(SplitIncomplete);
DEPTHGAZE_DATA_ERROR(CountMismatch);
// fixation_processing
DEPTHGAZE_DATA_ERROR(EmptyFixationSet);
DEPTHGAZE_DATA_ERROR(TooFewViewers);
DEPTHGAZE_DATA_ERROR(NoScorableFrames);
// candidate_extraction
DEPTHGAZE_DATA_ERROR(DegenerateMap);
// transition_model
DEPTHGAZE_DATA_ERROR(MissingGroundTruth);
DEPTHGAZE_DATA_ERROR(SingleClass);
DEPTHGAZE_DATA_ERROR(NonFiniteFeature);
DEPTHGAZE_DATA_ERROR(EmptySourceSet);
DEPTHGAZE_DATA_ERROR(EmptyDestinationSet);
// tensor_core
DEPTHGAZE_DATA_ERROR(ShapeMismatch);
DEPTHGAZE_DATA_ERROR(OddDimension);
DEPTHGAZE_DATA_ERROR(GraphNotRecorded);
// conv_autoencoder
DEPTHGAZE_DATA_ERROR(EmptyTrainingSet);
DEPTHGAZE_DATA_ERROR(GroundTruthMissing);
// evaluation
DEPTHGAZE_DATA_ERROR(NoFixations);
DEPTHGAZE_DATA_ERROR(MissingPredictions);
// synth_and_cli
DEPTHGAZE_DATA_ERROR(IoError);

#undef DEPTHGAZE_DATA_ERROR

} // namespace depthgaze

#endif
