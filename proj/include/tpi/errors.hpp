#pragma once

#include <stdexcept>
#include <string>

namespace tpi {

// Every failure in the toolkit carries one of these codes so callers (and the
// CLI exit-code mapping) can react to the family rather than parse messages.
enum class Errc {
  // image / codec
  MalformedHeader,
  MaxvalUnsupported,
  TruncatedPayload,
  PngDecodeError,
  PngEncodeError,
  DimensionMismatch,
  InvalidArgument,
  // rasterizer
  EmptyText,
  UnsupportedGlyph,
  FontTooSmall,
  DoesNotFit,
  // consistency / injector
  OutOfBounds,
  StampTooLarge,
  NoValidPosition,
  PlacementExhausted,
  ConsistencyUnreachable,
  // pgd
  OracleFailure,
  // dataset / eval
  IoError,
  JsonError,
  EmptyDataset,
  SampleTooLarge,
  TooFewBreeds,
  EmptyRecords,
  CorruptRecord,
  // endpoint
  TransportError,
  HttpError,
  MalformedResponse,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::MaxvalUnsupported: return "MaxvalUnsupported";
    case Errc::TruncatedPayload: return "TruncatedPayload";
    case Errc::PngDecodeError: return "PngDecodeError";
    case Errc::PngEncodeError: return "PngEncodeError";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::EmptyText: return "EmptyText";
    case Errc::UnsupportedGlyph: return "UnsupportedGlyph";
    case Errc::FontTooSmall: return "FontTooSmall";
    case Errc::DoesNotFit: return "DoesNotFit";
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::StampTooLarge: return "StampTooLarge";
    case Errc::NoValidPosition: return "NoValidPosition";
    case Errc::PlacementExhausted: return "PlacementExhausted";
    case Errc::ConsistencyUnreachable: return "ConsistencyUnreachable";
    case Errc::OracleFailure: return "OracleFailure";
    case Errc::IoError: return "IoError";
    case Errc::JsonError: return "JsonError";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::SampleTooLarge: return "SampleTooLarge";
    case Errc::TooFewBreeds: return "TooFewBreeds";
    case Errc::EmptyRecords: return "EmptyRecords";
    case Errc::CorruptRecord: return "CorruptRecord";
    case Errc::TransportError: return "TransportError";
    case Errc::HttpError: return "HttpError";
    case Errc::MalformedResponse: return "MalformedResponse";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const { return code_; }
  const char* name() const { return errc_name(code_); }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tpi
