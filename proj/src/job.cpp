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

#include <streamlab/job.hpp>

namespace streamlab {

std::string_view to_string(EngineKind kind) noexcept {
    return kind == EngineKind::Tuple ? "tuple" : "microbatch";
}

EngineKind parse_engine_kind(std::string_view text) {
    if (text == "tuple") return EngineKind::Tuple;
    if (text == "microbatch") return EngineKind::Microbatch;
    throw Error(Errc::Config, "unknown engine '" + std::string(text) + "' (expected tuple|microbatch)");
}

dataflow::JobReport NativeJob::execute(minilog::Broker& broker) const {
    if (engine == EngineKind::Tuple) {
        return tuple_engine::Engine(broker).execute(topology, parallelism);
    }
    return microbatch_engine::Engine(broker, batch_policy).execute(topology, parallelism);
}

dataflow::ExecutionPlan NativeJob::plan() const {
    if (engine == EngineKind::Tuple) {
        return dataflow::make_plan(topology, parallelism);
    }
    return dataflow::make_plan(topology, parallelism, microbatch_engine::kPlanAnnotation);
}

} // namespace streamlab
