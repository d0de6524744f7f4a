/**
 * Faster conv backprop for the pure-JS cpu backend.
 *
 * tfjs's cpu implementations of Conv2DBackpropInput/Filter are naive
 * loops, roughly 25x slower than its forward conv2d. For stride-1 NHWC
 * convolutions both gradients are themselves plain convolutions:
 *
 *   dX = conv2d(dY, rot180(W) with in/out channels swapped, 1, 'same')
 *   dW[kh,kw,ci,co] = valid-conv of padded X (channels as batch) with
 *                     dY (batch as input channels)
 *
 * so this module swaps the cpu kernels for implementations built on the
 * optimized forward conv. Only stride-1, dilation-1, NHWC calls are
 * supported (everything the harness models emit); anything else throws.
 */

import * as tf from '@tensorflow/tfjs';

type KernelFunc = Parameters<typeof tf.registerKernel>[0]['kernelFunc'];

interface SavedKernels {
  dx: ReturnType<typeof tf.getKernel>;
  dw: ReturnType<typeof tf.getKernel>;
}

let saved: SavedKernels | null = null;

function assertSupported(attrs: Record<string, unknown>, kernel: string): void {
  const strides = attrs['strides'] as number | number[];
  const s = Array.isArray(strides) ? strides : [strides, strides];
  if (s.some((v) => v !== 1)) {
    throw new Error(`${kernel}: fast path supports stride 1 only, got ${s}`);
  }
  const dilations = (attrs['dilations'] ?? 1) as number | number[];
  const d = Array.isArray(dilations) ? dilations : [dilations, dilations];
  if (d.some((v) => v !== 1)) {
    throw new Error(`${kernel}: fast path supports dilation 1 only, got ${d}`);
  }
  const dataFormat = (attrs['dataFormat'] ?? 'NHWC') as string;
  if (dataFormat !== 'NHWC') {
    throw new Error(`${kernel}: fast path supports NHWC only, got ${dataFormat}`);
  }
  const pad = attrs['pad'];
  if (pad !== 'same' && pad !== 'valid') {
    throw new Error(`${kernel}: fast path supports 'same'/'valid' padding, got ${pad}`);
  }
}

const fastBackpropInput: KernelFunc = (args) => {
  const { dy, filter } = args.inputs as { dy: tf.Tensor4D; filter: tf.Tensor4D };
  const attrs = args.attrs as Record<string, unknown>;
  assertSupported(attrs, 'Conv2DBackpropInput');
  return tf.tidy(() => {
    const wRot = tf.reverse(filter, [0, 1]).transpose([0, 1, 3, 2]);
    if (attrs['pad'] === 'same') {
      return tf.conv2d(dy, wRot as tf.Tensor4D, 1, 'same');
    }
    const kh = filter.shape[0];
    const kw = filter.shape[1];
    const padded = tf.pad(dy, [
      [0, 0], [kh - 1, kh - 1], [kw - 1, kw - 1], [0, 0],
    ]);
    return tf.conv2d(padded as tf.Tensor4D, wRot as tf.Tensor4D, 1, 'valid');
  });
};

const fastBackpropFilter: KernelFunc = (args) => {
  const { x, dy } = args.inputs as { x: tf.Tensor4D; dy: tf.Tensor4D };
  const attrs = args.attrs as Record<string, unknown>;
  assertSupported(attrs, 'Conv2DBackpropFilter');
  const [kh, kw] = attrs['filterShape'] as number[];
  return tf.tidy(() => {
    let xp: tf.Tensor4D = x;
    if (attrs['pad'] === 'same') {
      const ph0 = Math.floor((kh - 1) / 2);
      const pw0 = Math.floor((kw - 1) / 2);
      xp = tf.pad(x, [
        [0, 0], [ph0, kh - 1 - ph0], [pw0, kw - 1 - pw0], [0, 0],
      ]) as tf.Tensor4D;
    }
    const xT = xp.transpose([3, 1, 2, 0]) as tf.Tensor4D;   // [ci, H, W, B]
    const dyT = dy.transpose([1, 2, 0, 3]) as tf.Tensor4D;  // [OH, OW, B, co]
    return tf.conv2d(xT, dyT, 1, 'valid').transpose([1, 2, 0, 3]);
  });
};

export function enableFastConvGradients(): void {
  if (saved !== null) return;
  saved = {
    dx: tf.getKernel('Conv2DBackpropInput', 'cpu'),
    dw: tf.getKernel('Conv2DBackpropFilter', 'cpu'),
  };
  tf.unregisterKernel('Conv2DBackpropInput', 'cpu');
  tf.unregisterKernel('Conv2DBackpropFilter', 'cpu');
  tf.registerKernel({
    kernelName: 'Conv2DBackpropInput',
    backendName: 'cpu',
    kernelFunc: fastBackpropInput,
  });
  tf.registerKernel({
    kernelName: 'Conv2DBackpropFilter',
    backendName: 'cpu',
    kernelFunc: fastBackpropFilter,
  });
}

export function disableFastConvGradients(): void {
  if (saved === null) return;
  tf.unregisterKernel('Conv2DBackpropInput', 'cpu');
  tf.unregisterKernel('Conv2DBackpropFilter', 'cpu');
  tf.registerKernel(saved.dx);
  tf.registerKernel(saved.dw);
  saved = null;
}
