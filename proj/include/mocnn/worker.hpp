#pragma once

#include "mocnn/dispatch.hpp"
#include "mocnn/evaluation.hpp"
#include "mocnn/protocol.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

namespace mocnn {

struct WorkerOptions {
    /// Artificial time spent per EVALUATE before the evaluator runs.
    std::chrono::milliseconds delay{0};
    /// Overrides `delay` per job when set.
    std::function<std::chrono::milliseconds(std::uint64_t jobId)> delayForJob;
};

/// Transport-independent request handling. Evaluations are serialized by a
/// single-slot lock, so one worker never runs two jobs at once.
class WorkerCore {
public:
    explicit WorkerCore(std::shared_ptr<Evaluator> evaluator, WorkerOptions options = {});

    /// Maps one request to its reply. Evaluator failures become ERROR
    /// replies. Throws protocol::TransportError if `interrupted` fires
    /// during the artificial delay.
    protocol::Json handle(const protocol::Json& request, const std::function<bool()>& interrupted = {});

    std::size_t evaluations() const { return evaluations_.load(); }

private:
    std::shared_ptr<Evaluator> evaluator_;
    WorkerOptions options_;
    std::mutex slot_;
    std::atomic<std::size_t> evaluations_{0};
};

/// TCP server for the framed protocol. One thread per connection; requests
/// on a connection are answered in order.
class WorkerServer {
public:
    WorkerServer(std::string bindAddress, std::shared_ptr<Evaluator> evaluator, WorkerOptions options = {});
    ~WorkerServer();
    WorkerServer(const WorkerServer&) = delete;
    WorkerServer& operator=(const WorkerServer&) = delete;

    /// Binds and accepts on a background thread.
    void start();
    /// Binds and accepts on the calling thread until stop().
    void serve();
    void stop();

    /// Bound port; valid after start() or once serve() is running.
    std::uint16_t port() const;
    std::string address() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Worker driven by direct calls. Requests and replies still pass through
/// frame encoding so it behaves exactly like a networked worker.
class InProcessWorker final : public WorkerLink {
public:
    explicit InProcessWorker(std::shared_ptr<Evaluator> evaluator, WorkerOptions options = {},
                             std::string name = "in-process");

    protocol::Json call(const protocol::Json& request, std::chrono::milliseconds timeout) override;
    std::string address() const override { return name_; }
    void cancel() override { cancelled_ = true; }

    /// Simulates a crash: the running job is lost and calls fail until revive().
    void kill() { killed_ = true; }
    void revive() { killed_ = false; }
    bool alive() const { return !killed_; }

    std::size_t evaluations() const { return core_.evaluations(); }

private:
    WorkerCore core_;
    std::string name_;
    std::atomic<bool> killed_{false};
    std::atomic<bool> cancelled_{false};
};

} // namespace mocnn
