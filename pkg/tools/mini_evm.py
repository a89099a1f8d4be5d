"""Just enough of the EVM to run a compiled constructor and collect its SSTOREs.

No gas, no calls, no logs: a single frame with zero callvalue and empty
calldata. Anything outside that subset raises, so a constructor that needs
more fails loudly instead of producing a wrong storage dump.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from keccak_ref import keccak256  # noqa: E402

M = 1 << 256


def _signed(x):
    return x - M if x >> 255 else x


class EVMError(Exception):
    pass


def _jumpdests(code: bytes) -> set[int]:
    out, pc = set(), 0
    while pc < len(code):
        op = code[pc]
        if op == 0x5B:
            out.add(pc)
        pc += 1 + (op - 0x5F if 0x60 <= op <= 0x7F else 0)
    return out


def run_initcode(code: bytes, max_steps: int = 5_000_000) -> dict[int, int]:
    """Execute ``code`` as a constructor; return the final nonzero storage."""
    storage: dict[int, int] = {}
    stack: list[int] = []
    mem = bytearray()
    dests = _jumpdests(code)
    pc = 0

    def pop():
        if not stack:
            raise EVMError(f"stack underflow at pc {pc}")
        return stack.pop()

    def push(x):
        stack.append(x % M)

    def touch(off, size):
        if size and off + size > len(mem):
            mem.extend(bytes(-(-(off + size) // 32) * 32 - len(mem)))

    for _ in range(max_steps):
        op = code[pc] if pc < len(code) else 0x00
        pc0, pc = pc, pc + 1
        if 0x60 <= op <= 0x7F:
            n = op - 0x5F
            push(int.from_bytes(code[pc : pc + n].ljust(n, b"\0"), "big"))
            pc += n
        elif 0x80 <= op <= 0x8F:
            push(stack[-(op - 0x7F)])
        elif 0x90 <= op <= 0x9F:
            i = op - 0x8E
            stack[-1], stack[-i] = stack[-i], stack[-1]
        elif op == 0x00:
            break
        elif op == 0x01:
            push(pop() + pop())
        elif op == 0x02:
            push(pop() * pop())
        elif op == 0x03:
            a, b = pop(), pop()
            push(a - b)
        elif op == 0x04:
            a, b = pop(), pop()
            push(a // b if b else 0)
        elif op == 0x06:
            a, b = pop(), pop()
            push(a % b if b else 0)
        elif op == 0x0A:
            a, b = pop(), pop()
            push(pow(a, b, M))
        elif op == 0x0B:
            b, x = pop(), pop()
            if b < 31:
                bit = 8 * b + 7
                mask = (1 << bit) - 1
                x = (x | (M - 1 - mask)) if x >> bit & 1 else (x & mask)
            push(x)
        elif op == 0x10:
            a, b = pop(), pop()
            push(int(a < b))
        elif op == 0x11:
            a, b = pop(), pop()
            push(int(a > b))
        elif op == 0x12:
            a, b = pop(), pop()
            push(int(_signed(a) < _signed(b)))
        elif op == 0x13:
            a, b = pop(), pop()
            push(int(_signed(a) > _signed(b)))
        elif op == 0x14:
            push(int(pop() == pop()))
        elif op == 0x15:
            push(int(pop() == 0))
        elif op == 0x16:
            push(pop() & pop())
        elif op == 0x17:
            push(pop() | pop())
        elif op == 0x18:
            push(pop() ^ pop())
        elif op == 0x19:
            push(M - 1 - pop())
        elif op == 0x1A:
            i, x = pop(), pop()
            push(x >> (8 * (31 - i)) & 0xFF if i < 32 else 0)
        elif op == 0x1B:
            s, x = pop(), pop()
            push(x << s if s < 256 else 0)
        elif op == 0x1C:
            s, x = pop(), pop()
            push(x >> s if s < 256 else 0)
        elif op == 0x1D:
            s, x = pop(), pop()
            push(_signed(x) >> min(s, 255))
        elif op == 0x20:
            off, size = pop(), pop()
            touch(off, size)
            push(int.from_bytes(keccak256(bytes(mem[off : off + size])), "big"))
        elif op in (0x30, 0x33):  # ADDRESS, CALLER
            push(0)
        elif op in (0x34, 0x36):  # CALLVALUE, CALLDATASIZE
            push(0)
        elif op == 0x35:  # CALLDATALOAD
            pop()
            push(0)
        elif op == 0x38:
            push(len(code))
        elif op == 0x39:
            dst, src, size = pop(), pop(), pop()
            touch(dst, size)
            mem[dst : dst + size] = code[src : src + size].ljust(size, b"\0")
        elif op == 0x50:
            pop()
        elif op == 0x51:
            off = pop()
            touch(off, 32)
            push(int.from_bytes(mem[off : off + 32], "big"))
        elif op == 0x52:
            off, val = pop(), pop()
            touch(off, 32)
            mem[off : off + 32] = val.to_bytes(32, "big")
        elif op == 0x53:
            off, val = pop(), pop()
            touch(off, 1)
            mem[off] = val & 0xFF
        elif op == 0x54:
            push(storage.get(pop(), 0))
        elif op == 0x55:
            key, val = pop(), pop()
            if val:
                storage[key] = val
            else:
                storage.pop(key, None)
        elif op == 0x56:
            pc = pop()
            if pc not in dests:
                raise EVMError(f"bad jump to {pc}")
        elif op == 0x57:
            dest, cond = pop(), pop()
            if cond:
                if dest not in dests:
                    raise EVMError(f"bad jump to {dest}")
                pc = dest
        elif op == 0x58:
            push(pc0)
        elif op == 0x59:
            push(len(mem))
        elif op == 0x5A:
            push(M - 1)
        elif op == 0x5B:
            pass
        elif op == 0x5E:  # MCOPY
            dst, src, size = pop(), pop(), pop()
            touch(max(dst, src), size)
            mem[dst : dst + size] = bytes(mem[src : src + size])
        elif op == 0x5F:
            push(0)
        elif op == 0xF3:
            break
        elif op == 0xFD:
            raise EVMError(f"constructor reverted at pc {pc0}")
        else:
            raise EVMError(f"opcode 0x{op:02x} at pc {pc0} is outside the supported subset")
    else:
        raise EVMError("step limit exceeded")
    return storage
