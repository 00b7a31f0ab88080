//! Master/worker wire protocol, the task vocabulary and the worker loop.

mod frame;
mod task;
mod worker;

pub use frame::{
    decode, encode, recover_id, text_lines, write_message, Command, DecodeError, ErrorCode,
    FrameError, FrameReader, Message, END, PAYLOAD_PREFIX,
};
pub use task::{eval_operand, eval_task, Arg, Operand, TaskError, TaskExpr, VOCABULARY};
pub use worker::{
    export_text, protocol_of, version_string, worker_serve, Worker, WorkerInfo, PROTOCOL_VERSION,
};
