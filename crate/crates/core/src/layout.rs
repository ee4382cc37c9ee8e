//! Strided element-placement descriptors.
//!
//! A [`Layout`] describes where the elements of one *unit* live relative to a
//! buffer origin, and how far apart consecutive units are (the extent). This
//! is the subset of derived datatypes needed to tile blocks straight into
//! their final positions: contiguous runs, vectors, resized extents and
//! nestings of those. Extents and offsets are counted in elements.

use std::cell::Cell;

use crate::element::Element;
use crate::error::{ensure, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Layout {
    /// A single element with extent 1.
    Element,
    /// `count` consecutive units of `base`, spaced by the base extent.
    Contiguous { count: usize, base: Box<Layout> },
    /// `blocks` blocks of `blocklen` base units, block starts `stride` base
    /// extents apart.
    Vector { blocks: usize, blocklen: usize, stride: usize, base: Box<Layout> },
    /// `base` with its extent replaced.
    Resized { extent: usize, base: Box<Layout> },
}

/// The elementary layout, usable wherever a `&'static Layout` is needed.
pub static ELEMENT: Layout = Layout::Element;

impl Layout {
    pub fn contiguous(count: usize, base: Layout) -> Self {
        Layout::Contiguous { count, base: Box::new(base) }
    }

    pub fn vector(blocks: usize, blocklen: usize, stride: usize, base: Layout) -> Self {
        Layout::Vector { blocks, blocklen, stride, base: Box::new(base) }
    }

    pub fn resized(self, extent: usize) -> Self {
        Layout::Resized { extent, base: Box::new(self) }
    }

    /// Elements per unit.
    pub fn size(&self) -> usize {
        match self {
            Layout::Element => 1,
            Layout::Contiguous { count, base } => count * base.size(),
            Layout::Vector { blocks, blocklen, base, .. } => blocks * blocklen * base.size(),
            Layout::Resized { base, .. } => base.size(),
        }
    }

    /// Distance between consecutive units.
    pub fn extent(&self) -> usize {
        match self {
            Layout::Element => 1,
            Layout::Contiguous { count, base } => count * base.extent(),
            Layout::Vector { blocks, blocklen, stride, base } => {
                if *blocks == 0 || *blocklen == 0 {
                    0
                } else {
                    ((blocks - 1) * stride + blocklen) * base.extent()
                }
            }
            Layout::Resized { extent, .. } => *extent,
        }
    }

    /// One past the largest offset touched by unit 0 (0 for empty layouts).
    pub fn span(&self) -> usize {
        let mut hi = 0;
        self.visit(0, &mut |off| hi = hi.max(off + 1));
        hi
    }

    /// True when every unit is a dense run and units abut each other.
    pub fn is_dense(&self) -> bool {
        match self {
            Layout::Element => true,
            Layout::Contiguous { base, .. } => base.is_dense(),
            Layout::Vector { blocks, blocklen, stride, base } => {
                base.is_dense() && (*blocks <= 1 || stride == blocklen)
            }
            Layout::Resized { extent, base } => base.is_dense() && *extent == base.size(),
        }
    }

    /// Offsets of the elements of `unit`, in pack order.
    pub fn offsets(&self, unit: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size());
        self.visit(unit * self.extent(), &mut |off| out.push(off));
        out
    }

    fn visit(&self, origin: usize, f: &mut dyn FnMut(usize)) {
        match self {
            Layout::Element => f(origin),
            Layout::Contiguous { count, base } => {
                let ext = base.extent();
                for q in 0..*count {
                    base.visit(origin + q * ext, f);
                }
            }
            Layout::Vector { blocks, blocklen, stride, base } => {
                let ext = base.extent();
                for b in 0..*blocks {
                    for e in 0..*blocklen {
                        base.visit(origin + (b * stride + e) * ext, f);
                    }
                }
            }
            Layout::Resized { base, .. } => base.visit(origin, f),
        }
    }

    /// Offsets of `units` consecutive units starting at `first`, in pack order.
    pub fn unit_range_offsets(&self, first: usize, units: usize) -> Vec<usize> {
        let ext = self.extent();
        let unit0 = self.offsets(0);
        let mut out = Vec::with_capacity(unit0.len() * units);
        for u in first..first + units {
            out.extend(unit0.iter().map(|o| o + u * ext));
        }
        out
    }

    /// Smallest buffer length that holds units `first..first + units`.
    pub fn required_len(&self, first: usize, units: usize) -> usize {
        if units == 0 || self.size() == 0 {
            return 0;
        }
        (first + units - 1) * self.extent() + self.span()
    }
}

/// Which kind of element movement a copy belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CopyKind {
    /// Packing into / unpacking out of a transport payload.
    Marshal,
    /// Local copy through the transport's self-communication path.
    SelfCopy,
    /// Filling a declared staging buffer.
    Staging,
    /// A direct call to [`copy_through`].
    Explicit,
}

/// Per-thread element copy counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CopyAudit {
    pub packed: u64,
    pub unpacked: u64,
    pub self_copied: u64,
    pub staged: u64,
    pub explicit: u64,
}

thread_local! {
    static AUDIT: Cell<CopyAudit> = const { Cell::new(CopyAudit {
        packed: 0, unpacked: 0, self_copied: 0, staged: 0, explicit: 0,
    }) };
}

impl CopyAudit {
    /// Counters of the calling thread.
    pub fn current() -> CopyAudit {
        AUDIT.with(|a| a.get())
    }

    pub fn reset() {
        AUDIT.with(|a| a.set(CopyAudit::default()));
    }

    pub fn since(&self, earlier: &CopyAudit) -> CopyAudit {
        CopyAudit {
            packed: self.packed - earlier.packed,
            unpacked: self.unpacked - earlier.unpacked,
            self_copied: self.self_copied - earlier.self_copied,
            staged: self.staged - earlier.staged,
            explicit: self.explicit - earlier.explicit,
        }
    }
}

pub(crate) fn record_unpack(n: usize) {
    AUDIT.with(|a| {
        let mut v = a.get();
        v.unpacked += n as u64;
        a.set(v);
    });
}

fn record(kind: CopyKind, n: usize) {
    AUDIT.with(|a| {
        let mut v = a.get();
        match kind {
            CopyKind::Marshal => v.packed += n as u64,
            CopyKind::SelfCopy => v.self_copied += n as u64,
            CopyKind::Staging => v.staged += n as u64,
            CopyKind::Explicit => v.explicit += n as u64,
        }
        a.set(v);
    });
}

/// `count` units of `layout` over a read-only buffer.
#[derive(Clone, Copy, Debug)]
pub struct View<'a, T> {
    data: &'a [T],
    count: usize,
    layout: &'a Layout,
}

/// `count` units of `layout` over a writable buffer.
#[derive(Debug)]
pub struct ViewMut<'a, T> {
    data: &'a mut [T],
    count: usize,
    layout: &'a Layout,
}

impl<'a, T: Element> View<'a, T> {
    pub fn new(data: &'a [T], count: usize, layout: &'a Layout) -> Self {
        Self { data, count, layout }
    }

    /// A dense run of elements.
    pub fn slice(data: &'a [T]) -> Self {
        Self { data, count: data.len(), layout: &ELEMENT }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn layout(&self) -> &'a Layout {
        self.layout
    }

    pub fn data(&self) -> &'a [T] {
        self.data
    }

    /// Number of elements described by the view.
    pub fn elements(&self) -> usize {
        self.count * self.layout.size()
    }

    /// Checks that the described footprint fits into the buffer.
    pub fn validate(&self) -> Result<()> {
        let need = self.layout.required_len(0, self.count);
        ensure!(need <= self.data.len(), "layout footprint needs {need} elements, buffer holds {}", self.data.len());
        Ok(())
    }

    /// Gathers units `first..first+units` into a dense vector.
    pub(crate) fn pack_units(&self, first: usize, units: usize, kind: CopyKind) -> Result<Vec<T>> {
        let need = self.layout.required_len(first, units);
        ensure!(need <= self.data.len(), "layout footprint needs {need} elements, buffer holds {}", self.data.len());
        let out: Vec<T> = if self.layout.is_dense() {
            let size = self.layout.size();
            self.data[first * size..(first + units) * size].to_vec()
        } else {
            self.layout.unit_range_offsets(first, units).into_iter().map(|o| self.data[o]).collect()
        };
        record(kind, out.len());
        Ok(out)
    }

    pub(crate) fn pack(&self, kind: CopyKind) -> Result<Vec<T>> {
        self.pack_units(0, self.count, kind)
    }

    /// Units `first..first+count` as a view of their own.
    pub fn sub(&self, first: usize, count: usize) -> View<'a, T> {
        let start = (first * self.layout.extent()).min(self.data.len());
        View { data: &self.data[start..], count, layout: self.layout }
    }
}

impl<'a, T: Element> ViewMut<'a, T> {
    pub fn new(data: &'a mut [T], count: usize, layout: &'a Layout) -> Self {
        Self { data, count, layout }
    }

    pub fn slice(data: &'a mut [T]) -> Self {
        let count = data.len();
        Self { data, count, layout: &ELEMENT }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn layout(&self) -> &'a Layout {
        self.layout
    }

    pub fn elements(&self) -> usize {
        self.count * self.layout.size()
    }

    pub fn as_view(&self) -> View<'_, T> {
        View { data: self.data, count: self.count, layout: self.layout }
    }

    pub fn validate(&self) -> Result<()> {
        self.as_view().validate()
    }

    /// Scatters dense `src` into units `first..first+units`.
    pub(crate) fn unpack_units(&mut self, first: usize, units: usize, src: &[T]) -> Result<()> {
        let need = self.layout.required_len(first, units);
        ensure!(need <= self.data.len(), "layout footprint needs {need} elements, buffer holds {}", self.data.len());
        let size = self.layout.size();
        ensure!(src.len() == units * size, "payload holds {} elements, expected {}", src.len(), units * size);
        if self.layout.is_dense() {
            self.data[first * size..(first + units) * size].copy_from_slice(src);
        } else {
            for (o, &x) in self.layout.unit_range_offsets(first, units).into_iter().zip(src) {
                self.data[o] = x;
            }
        }
        record_unpack(src.len());
        Ok(())
    }

    pub fn unpack(&mut self, src: &[T]) -> Result<()> {
        let units = self.count;
        self.unpack_units(0, units, src)
    }

    /// Units `first..first+count` as a view of their own.
    pub fn sub_mut(&mut self, first: usize, count: usize) -> ViewMut<'_, T> {
        let start = (first * self.layout.extent()).min(self.data.len());
        ViewMut { data: &mut self.data[start..], count, layout: self.layout }
    }
}

fn copy_elements<T: Element>(src: View<'_, T>, dst: &mut ViewMut<'_, T>, kind: CopyKind) -> Result<()> {
    ensure!(
        src.elements() == dst.elements(),
        "copy between layouts of {} and {} elements",
        src.elements(),
        dst.elements()
    );
    src.validate()?;
    dst.validate()?;
    let packed = src.pack_units(0, src.count, kind)?;
    let units = dst.count;
    if dst.layout.is_dense() {
        let size = dst.layout.size();
        dst.data[..units * size].copy_from_slice(&packed);
    } else {
        for (o, x) in dst.layout.unit_range_offsets(0, units).into_iter().zip(packed) {
            dst.data[o] = x;
        }
    }
    Ok(())
}

/// Copies element-for-element in pack order from one layout into another.
///
/// Both sides must describe the same number of elements. Calls are counted
/// as [`CopyKind::Explicit`] in the thread's [`CopyAudit`].
pub fn copy_through<T: Element>(src: View<'_, T>, mut dst: ViewMut<'_, T>) -> Result<()> {
    copy_elements(src, &mut dst, CopyKind::Explicit)
}

pub(crate) fn self_copy<T: Element>(src: View<'_, T>, mut dst: ViewMut<'_, T>) -> Result<()> {
    copy_elements(src, &mut dst, CopyKind::SelfCopy)
}

/// Copies a dense slice into a fresh staging buffer.
pub(crate) fn stage<T: Element>(src: &[T]) -> Vec<T> {
    record(CopyKind::Staging, src.len());
    src.to_vec()
}

/// Permutes `buf` in place through a staging area: afterwards the buffer
/// holds, in dense order, the elements `src_layout` selects.
pub fn permute_in_place<T: Element>(buf: &mut [T], count: usize, src_layout: &Layout) -> Result<()> {
    let staged = View::new(&*buf, count, src_layout).pack(CopyKind::Staging)?;
    buf[..staged.len()].copy_from_slice(&staged);
    Ok(())
}
