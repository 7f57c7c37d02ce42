#pragma once

#include "mocnn/encoding.hpp"
#include "mocnn/evaluation.hpp"
#include "mocnn/protocol.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mocnn {

using namespace std::chrono_literals;

/// Request/response channel to one evaluation worker.
///
/// `call` sends one message and returns the reply, or throws
/// protocol::TransportError if the worker cannot be reached in time.
class WorkerLink {
public:
    virtual ~WorkerLink() = default;
    virtual protocol::Json call(const protocol::Json& request, std::chrono::milliseconds timeout) = 0;
    virtual std::string address() const = 0;
    /// Aborts in-flight and future calls; used on shutdown.
    virtual void cancel() {}
};

/// Opens a fresh TCP connection per call.
class TcpWorkerLink final : public WorkerLink {
public:
    explicit TcpWorkerLink(std::string address);

    protocol::Json call(const protocol::Json& request, std::chrono::milliseconds timeout) override;
    std::string address() const override { return address_; }
    void cancel() override { cancelled_ = true; }

private:
    std::string address_;
    std::atomic<bool> cancelled_{false};
};

enum class WorkerState { Available, Busy, Dead };

struct WorkerEndpoint {
    std::string address;
    WorkerState state = WorkerState::Available;
    int consecutiveFailures = 0;
};

enum class ProbeResult { Available, Unavailable };

inline constexpr int kDeadAfterFailures = 3;

/// PING the worker and expect PONG within the timeout. Success clears the
/// failure count (reviving a dead endpoint); failure increments it and
/// marks the endpoint dead at three in a row. Never throws.
ProbeResult probe(WorkerLink& link, WorkerEndpoint& endpoint, std::chrono::milliseconds timeout = 2s);

struct DispatchOptions {
    std::chrono::milliseconds probeTimeout = 2s;
    std::chrono::milliseconds resultTimeout = 24h;
    /// Minimum spacing of re-probes of a dead worker.
    std::chrono::milliseconds probeInterval = 50ms;
    /// A job may be handed out again at most this many times.
    int maxReassignments = 3;
};

struct JobResult {
    std::uint64_t jobId = 0;
    double accuracy = 0.0;
    int bestEpoch = 0;
};

struct DispatchStats {
    std::size_t dispatched = 0;
    std::size_t reassigned = 0;
    std::size_t duplicatesDiscarded = 0;
    std::size_t maxInFlight = 0;
};

class BatchFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolves to results ordered like the submitted genotypes.
class BatchHandle {
public:
    BatchHandle() = default;
    explicit BatchHandle(std::shared_future<std::vector<JobResult>> future) : future_(std::move(future)) {}

    /// Blocks; throws BatchFailed if the batch could not be completed.
    const std::vector<JobResult>& get() const { return future_.get(); }
    bool ready() const { return future_.wait_for(0s) == std::future_status::ready; }

private:
    std::shared_future<std::vector<JobResult>> future_;
};

/// Proxy between the search and a set of single-slot workers.
///
/// Submitted jobs join one FIFO pool. A dispatcher thread probes idle
/// workers and hands each live one the next pending job; every worker has
/// its own executor thread, so a worker never holds more than one job.
/// Workers are refilled as soon as they finish rather than per sub-batch.
/// Failed jobs return to the front of the pool until their reassignment
/// budget is spent, at which point their batch fails. A batch also fails
/// when every worker is dead.
class Dispatcher {
public:
    Dispatcher(std::vector<std::shared_ptr<WorkerLink>> workers, DispatchOptions options = {});
    ~Dispatcher();
    Dispatcher(const Dispatcher&) = delete;
    Dispatcher& operator=(const Dispatcher&) = delete;

    /// Throws std::runtime_error after shutdown().
    BatchHandle submitBatch(const std::vector<DecodedGenotype>& genotypes, const SearchSpace& space);

    void shutdown();

    DispatchStats stats() const;
    std::vector<WorkerEndpoint> endpoints() const;

private:
    enum class JobStatus { Pending, InFlight, Done, Failed };

    struct Batch {
        std::vector<JobResult> results;
        std::vector<bool> filled;
        std::size_t remaining = 0;
        std::promise<std::vector<JobResult>> promise;
        bool settled = false;
    };

    struct Job {
        std::uint64_t id = 0;
        std::shared_ptr<Batch> batch;
        std::size_t slot = 0;
        protocol::Json request;
        JobStatus status = JobStatus::Pending;
        int dispatches = 0;
        std::string lastError;
    };

    struct Worker {
        std::shared_ptr<WorkerLink> link;
        WorkerEndpoint endpoint;
        std::optional<std::uint64_t> assigned;
        std::chrono::steady_clock::time_point lastProbe{};
        std::condition_variable wake;
        std::thread executor;
    };

    void dispatchLoop();
    void executorLoop(std::size_t index);
    void complete(std::size_t worker, std::uint64_t jobId, const protocol::Json& reply);
    void fail(std::size_t worker, std::uint64_t jobId, const std::string& why, bool workerFault);
    void failBatch(const std::shared_ptr<Batch>& batch, const std::string& why);
    std::size_t inFlight() const;

    DispatchOptions options_;
    std::vector<std::unique_ptr<Worker>> workers_;
    mutable std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::uint64_t, Job> jobs_;
    std::deque<std::uint64_t> pending_;
    std::uint64_t nextJobId_ = 0;
    bool stopping_ = false;
    DispatchStats stats_;
    std::thread loop_;
};

/// AccuracyBackend that sends each batch through a Dispatcher.
class DispatchBackend final : public AccuracyBackend {
public:
    explicit DispatchBackend(Dispatcher& dispatcher) : dispatcher_(dispatcher) {}

    std::vector<AccuracyResult> evaluateBatch(std::span<const DecodedGenotype> batch,
                                              const SearchSpace& space) override;
    std::string id() const override { return "remote"; }

private:
    Dispatcher& dispatcher_;
};

} // namespace mocnn
