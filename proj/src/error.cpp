// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <streamlab/error.hpp>

namespace streamlab {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::DuplicateTopic: return "duplicate-topic";
    case Errc::UnknownTopic: return "unknown-topic";
    case Errc::InvalidPartition: return "invalid-partition";
    case Errc::EmptyPartition: return "empty-partition";
    case Errc::NonEmptyTopic: return "non-empty-topic";
    case Errc::InvalidSpec: return "invalid-spec";
    case Errc::MalformedRecord: return "malformed-record";
    case Errc::MissingSink: return "missing-sink";
    case Errc::InvalidTopology: return "invalid-topology";
    case Errc::InvalidPolicy: return "invalid-policy";
    case Errc::JobFailed: return "job-failed";
    case Errc::TypeMismatch: return "type-mismatch";
    case Errc::UnkeyedGroupByKey: return "group-by-key-on-unkeyed";
    case Errc::UnwindowedGroupByKey: return "unwindowed-group-by-key";
    case Errc::UnsupportedConstruct: return "unsupported-construct";
    case Errc::InvalidCombination: return "invalid-combination";
    case Errc::EmptyOutput: return "empty-output";
    case Errc::EmptyInput: return "empty-input";
    case Errc::DivisionByZero: return "division-by-zero";
    case Errc::MismatchedParallelisms: return "mismatched-parallelisms";
    case Errc::InsufficientRuns: return "insufficient-runs";
    case Errc::Io: return "io";
    case Errc::Config: return "config";
    }
    return "unknown";
}

} // namespace streamlab
