#pragma once

#include <stdexcept>
#include <string>

namespace mve {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// imaging
class EvenOrTooSmallBlocksize : public Error { public: using Error::Error; };

// classifier
class NonFiniteLogit : public Error { public: using Error::Error; };
class EmptyTrainingSet : public Error { public: using Error::Error; };
class LabelOutOfRange : public Error { public: using Error::Error; };
class ShapeMismatch : public Error { public: using Error::Error; };

// ensemble
class EmptyMemberList : public Error { public: using Error::Error; };
class LengthMismatch : public Error { public: using Error::Error; };

// eval
class InsufficientSamples : public Error { public: using Error::Error; };

// consistency
class ImageListMismatch : public Error { public: using Error::Error; };
class FewerThanTwoSystems : public Error { public: using Error::Error; };

// dataset
class MissingRoot : public Error { public: using Error::Error; };
class UnreadableImage : public Error { public: using Error::Error; };
class EmptyClass : public Error { public: using Error::Error; };
class SpecOutOfRange : public Error { public: using Error::Error; };
class FingerprintMismatch : public Error { public: using Error::Error; };

// serialization / generic I/O
class IoError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

} // namespace mve
